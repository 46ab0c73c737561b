#include "stability/algorithm.hpp"

#include <algorithm>
#include <mutex>
#include <stdexcept>
#include <unordered_map>

namespace stability {

int run_on_fresh_sample(const MeteredAlgorithm& alg,
                        const std::shared_ptr<const FiniteDistribution>& dist,
                        BitTape& tape, SplitMix& rng) {
    if (alg.tape_laws) {
        auto laws = alg.tape_laws(*dist);
        bool exact = !laws.empty();
        for (const auto& l : laws) exact = exact && l.exact;
        if (exact && static_cast<int>(laws.size()) == (1 << alg.bit_budget)) {
            uint64_t r = tape.read_bits(alg.bit_budget);
            return laws[static_cast<size_t>(r)].law.sample(rng);
        }
    }
    if (alg.sampler) return alg.sampler(*dist, tape, rng);
    Sample s = sample(dist, alg.sample_size, rng());
    return alg.eval(s, tape);
}

std::function<std::vector<OutputLaw>(const FiniteDistribution&)> cache_tape_laws(
    std::function<std::vector<OutputLaw>(const FiniteDistribution&)> fn) {
    struct Cache {
        std::mutex mu;
        std::unordered_map<uint64_t, std::vector<OutputLaw>> map;
    };
    auto cache = std::make_shared<Cache>();
    return [fn = std::move(fn), cache](const FiniteDistribution& d) {
        {
            std::lock_guard<std::mutex> lock(cache->mu);
            auto it = cache->map.find(d.fingerprint());
            if (it != cache->map.end()) return it->second;
        }
        auto laws = fn(d);
        std::lock_guard<std::mutex> lock(cache->mu);
        cache->map.emplace(d.fingerprint(), laws);
        return laws;
    };
}

std::optional<OutputLaw> marginal_law(const MeteredAlgorithm& alg, const FiniteDistribution& dist) {
    if (!alg.tape_laws) return std::nullopt;
    auto laws = alg.tape_laws(dist);
    if (laws.empty()) return std::nullopt;
    std::vector<double> p(static_cast<size_t>(laws[0].law.size()), 0.0);
    bool exact = true;
    double err = 0;
    for (const auto& l : laws) {
        for (int y = 0; y < l.law.size(); ++y) p[static_cast<size_t>(y)] += l.law.prob(y) / laws.size();
        exact = exact && l.exact;
        err = std::max(err, l.error_bound);
    }
    return OutputLaw{FiniteDistribution(std::move(p)), exact, err};
}

namespace {

struct LawTable {
    std::vector<std::pair<uint64_t, std::vector<FiniteDistribution>>> by_fingerprint;

    const std::vector<FiniteDistribution>& find(uint64_t fp) const {
        for (const auto& [key, laws] : by_fingerprint)
            if (key == fp) return laws;
        throw UnknownDistribution("oracle queried on a distribution outside its law map");
    }
};

}  // namespace

MeteredAlgorithm make_tape_oracle_algorithm(
    std::vector<std::pair<FiniteDistribution, std::vector<FiniteDistribution>>> laws_per_distribution,
    int64_t sample_size, int bits, int output_domain_size) {
    auto table = std::make_shared<LawTable>();
    auto data_dists = std::make_shared<std::vector<std::pair<uint64_t, FiniteDistribution>>>();
    for (auto& [d, laws] : laws_per_distribution) {
        if (static_cast<int>(laws.size()) != (1 << bits))
            throw std::invalid_argument("tape oracle: need one law per tape");
        for (const auto& l : laws)
            if (l.size() != output_domain_size)
                throw std::invalid_argument("tape oracle: law support does not match output domain");
        data_dists->push_back({d.fingerprint(), d});
        table->by_fingerprint.push_back({d.fingerprint(), std::move(laws)});
    }

    MeteredAlgorithm alg;
    alg.sample_size = sample_size;
    alg.bit_budget = bits;
    alg.eval = [table, data_dists, bits](const Sample& s, BitTape& tape) {
        const auto& laws = table->find(s.dist_fingerprint());
        uint64_t r = tape.read_bits(bits);
        double u;
        if (s.is_stream()) {
            SplitMix rng(s.entropy_seed());
            u = rng.unit();
        } else {
            // Explicit samples go through the probability integral transform
            // so enumeration tests get a certified induced law.
            const FiniteDistribution* d = nullptr;
            for (const auto& [fp, dd] : *data_dists)
                if (fp == s.dist_fingerprint()) d = &dd;
            if (!d) throw UnknownDistribution("oracle queried on an unmapped explicit sample");
            u = sample_pit(s, *d);
        }
        return laws[static_cast<size_t>(r)].quantile(u);
    };
    alg.tape_laws = [table](const FiniteDistribution& d) {
        const auto& laws = table->find(d.fingerprint());
        std::vector<OutputLaw> out;
        out.reserve(laws.size());
        for (const auto& l : laws) out.push_back(OutputLaw{l, true, 0.0});
        return out;
    };
    alg.sampler = [table, bits](const FiniteDistribution& d, BitTape& tape, SplitMix& rng) {
        const auto& laws = table->find(d.fingerprint());
        uint64_t r = tape.read_bits(bits);
        return laws[static_cast<size_t>(r)].sample(rng);
    };
    return alg;
}

MeteredAlgorithm make_oracle_algorithm(
    std::vector<std::pair<FiniteDistribution, FiniteDistribution>> law_per_distribution,
    int64_t sample_size, int output_domain_size) {
    std::vector<std::pair<FiniteDistribution, std::vector<FiniteDistribution>>> lifted;
    lifted.reserve(law_per_distribution.size());
    for (auto& [d, law] : law_per_distribution)
        lifted.push_back({std::move(d), {std::move(law)}});
    return make_tape_oracle_algorithm(std::move(lifted), sample_size, 0, output_domain_size);
}

MeteredAlgorithm make_sample_mode_algorithm(int64_t sample_size) {
    MeteredAlgorithm alg;
    alg.sample_size = sample_size;
    alg.bit_budget = 0;
    alg.eval = [](const Sample& s, BitTape&) {
        std::vector<int64_t> counts;
        for (int64_t i = 0; i < s.size(); ++i) {
            int x = s.at(i);
            if (x >= static_cast<int>(counts.size())) counts.resize(static_cast<size_t>(x) + 1, 0);
            ++counts[static_cast<size_t>(x)];
        }
        int best = 0;
        for (int i = 1; i < static_cast<int>(counts.size()); ++i)
            if (counts[static_cast<size_t>(i)] > counts[static_cast<size_t>(best)]) best = i;
        return best;
    };
    return alg;
}

}  // namespace stability
