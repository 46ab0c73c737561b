#include "stability/compress.hpp"

#include <cmath>
#include <stdexcept>

namespace stability {

using boost::multiprecision::cpp_int;

Rational exact_rational(double p) {
    if (p == 0) return Rational(0);
    int exp = 0;
    double m = std::frexp(p, &exp);  // p = m * 2^exp, m in [0.5, 1)
    auto mant = static_cast<int64_t>(std::ldexp(m, 53));
    exp -= 53;
    Rational r(mant);
    if (exp >= 0)
        r *= Rational(cpp_int(1) << exp);
    else
        r /= Rational(cpp_int(1) << -exp);
    return r;
}

CompressedSampler compress_distribution_exact(const std::vector<Rational>& base_probs, int bits) {
    const int k = bits;
    const size_t n = base_probs.size();
    int support_size = 0;
    for (const auto& p : base_probs)
        if (p > 0) ++support_size;
    int min_bits = ceil_log2(static_cast<uint64_t>(std::max(support_size, 1)));
    if (k < min_bits)
        throw std::invalid_argument("compress_distribution: need at least ceil(log2 |Supp|) = " +
                                    std::to_string(min_bits) + " bits, got " + std::to_string(k));
    if (k > 62) throw std::invalid_argument("compress_distribution: bits too large for table");

    const cpp_int cells = cpp_int(1) << k;

    // Floor each probability to a multiple of 2^-k.
    std::vector<int64_t> floor_cells(n, 0);
    cpp_int assigned = 0;
    for (size_t i = 0; i < n; ++i) {
        cpp_int c = (numerator(base_probs[i]) * cells) / denominator(base_probs[i]);
        floor_cells[i] = c.convert_to<int64_t>();
        assigned += c;
    }

    // Mode of the base (ties by phi) absorbs the leftover cells.
    size_t mode = 0;
    for (size_t i = 1; i < n; ++i)
        if (base_probs[i] > base_probs[mode]) mode = i;
    int64_t leftover = (cells - assigned).convert_to<int64_t>();
    floor_cells[mode] += leftover;

    CompressedSampler cs;
    cs.bits = k;
    cs.cell_target.reserve(static_cast<size_t>(1) << k);
    std::vector<double> induced(n, 0.0);
    Rational tv(0);
    const double cell_mass = std::ldexp(1.0, -k);
    for (size_t i = 0; i < n; ++i) {
        for (int64_t c = 0; c < floor_cells[i]; ++c) cs.cell_target.push_back(static_cast<int>(i));
        induced[i] = static_cast<double>(floor_cells[i]) * cell_mass;
        Rational gap = base_probs[i] - Rational(floor_cells[i]) / Rational(cells);
        if (gap > 0) tv += gap;
    }
    cs.induced = FiniteDistribution(std::move(induced));
    cs.tv_exact = tv;
    return cs;
}

CompressedSampler compress_distribution(const FiniteDistribution& base, int bits) {
    std::vector<Rational> probs;
    probs.reserve(static_cast<size_t>(base.size()));
    for (int i = 0; i < base.size(); ++i) probs.push_back(exact_rational(base.prob(i)));
    return compress_distribution_exact(probs, bits);
}

OutputLaw exact_law_over_tapes(const MeteredAlgorithm& alg, const Sample& fixed_sample,
                               int output_domain_size, int enum_cap) {
    const int budget = alg.bit_budget;
    if (budget > enum_cap)
        throw EnumerationTooLarge("exact_law_over_tapes: budget " + std::to_string(budget) +
                                  " exceeds enumeration cap " + std::to_string(enum_cap));
    std::vector<uint64_t> counts(static_cast<size_t>(output_domain_size), 0);
    for_each_tape_collapsed(budget, [&](BitTape& t) {
        int y = alg.eval(fixed_sample, t);
        int read = t.cursor();
        counts.at(static_cast<size_t>(y)) += 1ull << (budget - read);
        return read;
    }, enum_cap);

    const double total = std::ldexp(1.0, budget);
    std::vector<double> p(counts.size());
    int64_t support = 0;
    for (size_t i = 0; i < counts.size(); ++i) {
        p[i] = static_cast<double>(counts[i]) / total;
        if (counts[i]) ++support;
    }
    if (budget < 62 && support > (int64_t{1} << budget))
        throw std::logic_error("exact_law_over_tapes: support exceeds 2^budget");
    return OutputLaw{FiniteDistribution(std::move(p)), true, 0.0};
}

}  // namespace stability
