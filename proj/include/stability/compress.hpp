#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include "stability/algorithm.hpp"
#include "stability/bit_tape.hpp"
#include "stability/finite_distribution.hpp"

namespace stability {

using Rational = boost::multiprecision::cpp_rational;

// Low-randomness approximate sampler for a finite distribution: a table from
// k-bit strings to support elements. Construction rule is floor-then-mode:
// each probability is floored to a multiple of 2^-k and every leftover cell
// goes to the base mode (ties by phi). Guarantees, exactly:
//   - Supp(induced) is a subset of Supp(base)
//   - TV(base, induced) <= |Supp(base)| * 2^-k, and <= eta once
//     k >= ceil(log2 |Supp|) + ceil(log2(1/eta))
struct CompressedSampler {
    int bits = 0;
    std::vector<int> cell_target;     // 2^bits entries, phi-ordered blocks
    FiniteDistribution induced;       // exact dyadic law of the table
    Rational tv_exact;                // exact TV(base, induced)
    double tv() const { return tv_exact.convert_to<double>(); }

    int draw(BitTape& tape) const {
        uint64_t idx = tape.read_bits(bits);
        return cell_target[static_cast<size_t>(idx)];
    }
};

// Doubles are dyadic rationals, so the conversion is exact and the TV
// computation below carries zero tolerance.
Rational exact_rational(double p);

CompressedSampler compress_distribution(const FiniteDistribution& base, int bits);

// Exact rational core, for callers holding rational probabilities directly.
CompressedSampler compress_distribution_exact(const std::vector<Rational>& base_probs, int bits);

// Exact output law of alg on a fixed sample by tape enumeration. Support size
// is at most 2^budget (asserted). Uses collapsed enumeration, so algorithms
// whose read count varies per tape cost one eval per distinct read prefix.
OutputLaw exact_law_over_tapes(const MeteredAlgorithm& alg, const Sample& fixed_sample,
                               int output_domain_size, int enum_cap = kDefaultEnumCap);

}  // namespace stability
