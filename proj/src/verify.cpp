#include "stability/verify.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "stability/compress.hpp"

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace stability {

namespace {

// Runs one trial body per index into a result slot; the slot array makes the
// aggregation order-free so OpenMP and serial runs agree bit for bit.
// Exceptions (budget exhaustion inside alg, unknown distributions) are
// captured and rethrown after the region so they propagate to the caller.
template <typename F>
void run_trials(int64_t trials, Exec exec, F&& body) {
    if (exec == Exec::OpenMP) {
        std::exception_ptr err = nullptr;
#pragma omp parallel for schedule(static)
        for (int64_t t = 0; t < trials; ++t) {
            try {
                body(t);
            } catch (...) {
#pragma omp critical(stability_trial_err)
                if (!err) err = std::current_exception();
            }
        }
        if (err) std::rethrow_exception(err);
    } else {
        for (int64_t t = 0; t < trials; ++t) body(t);
    }
}

}  // namespace

ReplicabilityReport estimate_replicability(const MeteredAlgorithm& alg, const FiniteDistribution& dist,
                                           int64_t trials, bool shared, uint64_t seed, Exec exec) {
    if (trials < 1) throw std::invalid_argument("estimate_replicability: trials must be >= 1");
    auto dp = std::make_shared<const FiniteDistribution>(dist);
    std::vector<uint8_t> agree(static_cast<size_t>(trials), 0);
    run_trials(trials, exec, [&](int64_t t) {
        uint64_t ts = derive_seed(seed, static_cast<uint64_t>(t));
        BitTape r1 = fresh_tape(ts, 1, alg.bit_budget);
        BitTape r2 = shared ? r1 : fresh_tape(ts, 2, alg.bit_budget);
        SplitMix rng1(derive_seed(ts, 3));
        SplitMix rng2(derive_seed(ts, 4));
        int y1 = run_on_fresh_sample(alg, dp, r1, rng1);
        int y2 = run_on_fresh_sample(alg, dp, r2, rng2);
        agree[static_cast<size_t>(t)] = y1 == y2 ? 1 : 0;
    });
    int64_t hits = 0;
    for (uint8_t a : agree) hits += a;
    return ReplicabilityReport{static_cast<double>(hits) / static_cast<double>(trials), trials,
                               hoeffding_halfwidth(trials), shared};
}

std::vector<HeavyHitter> find_heavy_hitters(const MeteredAlgorithm& alg, const FiniteDistribution& dist,
                                            double eta, int64_t trials, uint64_t seed,
                                            int output_domain_size, Exec exec) {
    if (!(eta > 0 && eta <= 1)) throw std::invalid_argument("find_heavy_hitters: eta must be in (0,1]");
    int64_t min_trials = static_cast<int64_t>(std::ceil(8.0 * std::log(2.0 / 0.001) / (eta * eta)));
    if (trials < min_trials)
        throw std::invalid_argument("find_heavy_hitters: need >= " + std::to_string(min_trials) +
                                    " trials for eta = " + std::to_string(eta));
    auto dp = std::make_shared<const FiniteDistribution>(dist);
    std::vector<int> outs(static_cast<size_t>(trials), 0);
    run_trials(trials, exec, [&](int64_t t) {
        uint64_t ts = derive_seed(seed, static_cast<uint64_t>(t));
        BitTape r = fresh_tape(ts, 1, alg.bit_budget);
        SplitMix rng(derive_seed(ts, 3));
        outs[static_cast<size_t>(t)] = run_on_fresh_sample(alg, dp, r, rng);
    });
    std::vector<int64_t> counts(static_cast<size_t>(output_domain_size), 0);
    for (int y : outs) ++counts.at(static_cast<size_t>(y));

    const double threshold = eta - eta / 4;
    std::vector<HeavyHitter> hitters;
    for (int y = 0; y < output_domain_size; ++y) {
        double w = static_cast<double>(counts[static_cast<size_t>(y)]) / static_cast<double>(trials);
        if (w >= threshold) hitters.push_back(HeavyHitter{y, w});
    }
    std::sort(hitters.begin(), hitters.end(), [](const HeavyHitter& a, const HeavyHitter& b) {
        if (a.weight != b.weight) return a.weight > b.weight;
        return a.output < b.output;
    });
    auto max_len = static_cast<size_t>(std::ceil(1.0 / threshold));
    if (hitters.size() > max_len)
        throw std::logic_error("find_heavy_hitters: list longer than 1/threshold'");
    return hitters;
}

ConfidenceReport estimate_confidence(const MeteredAlgorithm& alg, const StatisticalTask& task,
                                     const FiniteDistribution& dist, int64_t trials, uint64_t seed,
                                     Exec exec) {
    if (trials < 1) throw std::invalid_argument("estimate_confidence: trials must be >= 1");
    auto dp = std::make_shared<const FiniteDistribution>(dist);
    std::vector<uint8_t> fail(static_cast<size_t>(trials), 0);
    run_trials(trials, exec, [&](int64_t t) {
        uint64_t ts = derive_seed(seed, static_cast<uint64_t>(t));
        BitTape r = fresh_tape(ts, 1, alg.bit_budget);
        SplitMix rng(derive_seed(ts, 3));
        int y = run_on_fresh_sample(alg, dp, r, rng);
        fail[static_cast<size_t>(t)] = is_correct(task, dist, y) ? 0 : 1;
    });
    int64_t bad = 0;
    for (uint8_t f : fail) bad += f;
    return ConfidenceReport{static_cast<double>(bad) / static_cast<double>(trials), trials,
                            hoeffding_halfwidth(trials)};
}

double hockey_stick(const FiniteDistribution& p, const FiniteDistribution& q, double epsilon) {
    if (p.size() != q.size()) throw std::invalid_argument("hockey_stick: mismatched supports");
    const double e = std::exp(epsilon);
    double acc = 0;
    for (int y = 0; y < p.size(); ++y) {
        double d = p.prob(y) - e * q.prob(y);
        if (d > 0) acc += d;
    }
    return acc;
}

PrivacyAudit audit_dp_exact(const MeteredAlgorithm& alg, const std::vector<NeighborPair>& pairs,
                            double epsilon, int output_domain_size, int enum_cap, Exec exec) {
    if (pairs.empty()) throw std::invalid_argument("audit_dp_exact: no neighbor pairs");
    if (alg.bit_budget > enum_cap)
        throw EnumerationTooLarge("audit_dp_exact: budget exceeds enumeration cap");
    const int64_t n = static_cast<int64_t>(pairs.size());
    std::vector<double> fwd(static_cast<size_t>(n)), rev(static_cast<size_t>(n));
    run_trials(n, exec, [&](int64_t i) {
        const auto& pr = pairs[static_cast<size_t>(i)];
        OutputLaw p = exact_law_over_tapes(alg, pr.s, output_domain_size, enum_cap);
        OutputLaw q = exact_law_over_tapes(alg, pr.s_prime, output_domain_size, enum_cap);
        fwd[static_cast<size_t>(i)] = hockey_stick(p.law, q.law, epsilon);
        rev[static_cast<size_t>(i)] = hockey_stick(q.law, p.law, epsilon);
    });
    PrivacyAudit audit;
    audit.epsilon = epsilon;
    for (int64_t i = 0; i < n; ++i) {
        if (fwd[static_cast<size_t>(i)] > audit.delta_max) {
            audit.delta_max = fwd[static_cast<size_t>(i)];
            audit.witness_pair = static_cast<int>(i);
            audit.witness_reversed = false;
        }
        if (rev[static_cast<size_t>(i)] > audit.delta_max) {
            audit.delta_max = rev[static_cast<size_t>(i)];
            audit.witness_pair = static_cast<int>(i);
            audit.witness_reversed = true;
        }
    }
    return audit;
}

namespace {

void decode(int64_t code, int domain, int n, std::vector<int>& out) {
    out.resize(static_cast<size_t>(n));
    for (int i = n - 1; i >= 0; --i) {
        out[static_cast<size_t>(i)] = static_cast<int>(code % domain);
        code /= domain;
    }
}

}  // namespace

std::vector<NeighborPair> item_neighbors(int domain_size, int n, int64_t cap) {
    if (domain_size < 2 || n < 1) throw std::invalid_argument("item_neighbors: need |X| >= 2, n >= 1");
    double universe = std::pow(domain_size, n);
    double total = universe * n * (domain_size - 1);
    if (total > static_cast<double>(cap))
        throw EnumerationTooLarge("item_neighbors: " + std::to_string(total) + " pairs exceed cap");
    std::vector<NeighborPair> pairs;
    std::vector<int> base, other;
    int64_t datasets = 1;
    for (int i = 0; i < n; ++i) datasets *= domain_size;
    for (int64_t code = 0; code < datasets; ++code) {
        decode(code, domain_size, n, base);
        for (int pos = 0; pos < n; ++pos) {
            for (int v = 0; v < domain_size; ++v) {
                if (v == base[static_cast<size_t>(pos)]) continue;
                other = base;
                other[static_cast<size_t>(pos)] = v;
                pairs.push_back(NeighborPair{Sample::explicit_elems(base), Sample::explicit_elems(other)});
            }
        }
    }
    return pairs;
}

std::vector<NeighborPair> user_neighbors(int domain_size, int block_size, int users, int64_t cap) {
    if (domain_size < 2 || block_size < 1 || users < 1)
        throw std::invalid_argument("user_neighbors: bad universe spec");
    int64_t block_values = 1;
    for (int i = 0; i < block_size; ++i) {
        block_values *= domain_size;
        if (block_values > cap) throw EnumerationTooLarge("user_neighbors: block universe exceeds cap");
    }
    double datasets = std::pow(static_cast<double>(block_values), users);
    double total = datasets * users * static_cast<double>(block_values - 1);
    if (total > static_cast<double>(cap))
        throw EnumerationTooLarge("user_neighbors: " + std::to_string(total) + " pairs exceed cap");

    int64_t ds_count = 1;
    for (int i = 0; i < users; ++i) ds_count *= block_values;

    std::vector<NeighborPair> pairs;
    std::vector<int> blocks, block_elems;
    for (int64_t code = 0; code < ds_count; ++code) {
        decode(code, static_cast<int>(block_values), users, blocks);
        std::vector<int> base;
        for (int u = 0; u < users; ++u) {
            decode(blocks[static_cast<size_t>(u)], domain_size, block_size, block_elems);
            base.insert(base.end(), block_elems.begin(), block_elems.end());
        }
        for (int u = 0; u < users; ++u) {
            for (int64_t alt = 0; alt < block_values; ++alt) {
                if (alt == blocks[static_cast<size_t>(u)]) continue;
                std::vector<int> other = base;
                decode(alt, domain_size, block_size, block_elems);
                std::copy(block_elems.begin(), block_elems.end(),
                          other.begin() + static_cast<int64_t>(u) * block_size);
                pairs.push_back(NeighborPair{Sample::explicit_elems(base), Sample::explicit_elems(other)});
            }
        }
    }
    return pairs;
}

}  // namespace stability
