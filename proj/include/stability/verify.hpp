#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "stability/algorithm.hpp"
#include "stability/task.hpp"

namespace stability {

// All estimators report two-sided Hoeffding confidence intervals at fixed
// confidence 0.999, so acceptance checks are deterministic given seeds.
inline double hoeffding_halfwidth(int64_t trials) {
    return std::sqrt(std::log(2000.0) / (2.0 * static_cast<double>(trials)));
}

struct ReplicabilityReport {
    double estimate = 0;
    int64_t trials = 0;
    double ci_halfwidth = 0;
    bool shared_tape = true;
};

struct ConfidenceReport {
    double failure_rate = 0;  // beta-hat
    int64_t trials = 0;
    double ci_halfwidth = 0;
};

struct HeavyHitter {
    int output = 0;
    double weight = 0;
};

// Fraction of trials where two runs on independent samples agree, tape shared
// iff shared = true. Deterministic given seed, independent of thread count.
ReplicabilityReport estimate_replicability(const MeteredAlgorithm& alg, const FiniteDistribution& dist,
                                           int64_t trials, bool shared, uint64_t seed,
                                           Exec exec = Exec::OpenMP);

// All outputs with empirical frequency >= eta - eta/4, sorted by weight then
// phi. Requires trials >= ceil(8 ln(2000) / eta^2) so weights are accurate to
// eta/4 whp; the returned list has at most ceil(1/(0.75 eta)) entries.
std::vector<HeavyHitter> find_heavy_hitters(const MeteredAlgorithm& alg, const FiniteDistribution& dist,
                                            double eta, int64_t trials, uint64_t seed,
                                            int output_domain_size, Exec exec = Exec::OpenMP);

// Fraction of runs landing outside the accepted set.
ConfidenceReport estimate_confidence(const MeteredAlgorithm& alg, const StatisticalTask& task,
                                     const FiniteDistribution& dist, int64_t trials, uint64_t seed,
                                     Exec exec = Exec::OpenMP);

// Hockey-stick divergence delta(P || Q) at e^epsilon: the exact
// (epsilon, delta)-DP witness for finite output spaces.
double hockey_stick(const FiniteDistribution& p, const FiniteDistribution& q, double epsilon);

struct NeighborPair {
    Sample s;
    Sample s_prime;
};

struct PrivacyAudit {
    double epsilon = 0;
    double delta_max = 0;
    int witness_pair = -1;       // index into the audited pair list
    bool witness_reversed = false;
    bool user_level = false;
};

// Exact (epsilon, delta)-DP audit: computes tape-enumerated output laws on
// each neighboring pair and reports the worst hockey-stick divergence over
// both orientations of every pair, with the maximizing witness.
PrivacyAudit audit_dp_exact(const MeteredAlgorithm& alg, const std::vector<NeighborPair>& pairs,
                            double epsilon, int output_domain_size,
                            int enum_cap = kDefaultEnumCap, Exec exec = Exec::OpenMP);

// All ordered item-level neighbor pairs over X^n: datasets differing in
// exactly one coordinate. Count is |X|^n * n * (|X|-1); capped.
std::vector<NeighborPair> item_neighbors(int domain_size, int n, int64_t cap = 1 << 20);

// User-level pairs: T blocks of block_size elements each; neighbors replace
// one entire block with a different one.
std::vector<NeighborPair> user_neighbors(int domain_size, int block_size, int users,
                                         int64_t cap = 1 << 20);

}  // namespace stability
