#pragma once

#include <optional>
#include <span>

#include "stability/algorithm.hpp"
#include "stability/analysis.hpp"
#include "stability/task.hpp"
#include "stability/verify.hpp"

namespace stability {

// Thrown when a transform's measured precondition fails; carries the value.
struct PreconditionFailed : std::runtime_error {
    double measured;
    PreconditionFailed(const std::string& what, double v) : std::runtime_error(what), measured(v) {}
};

struct DistMetric {
    uint64_t dist_fingerprint = 0;
    double value = 0;
    double ci = 0;
};

// ---- heavy-hitter derandomization -----------------------------------------

// Two stages on each evaluation: run the input algorithm on
// ceil(2 ln(1/gamma') / eta^2) fresh sub-samples per tape (blocks shared
// across tapes) and take the phi-min mode, then output the phi-min plurality
// across all 2^budget tapes. The result is deterministic (budget 0). The
// measured two-run collision per family distribution is attached; a missing
// heavy hitter shows up as verified = false, not silently.
struct DerandomizeResult {
    MeteredAlgorithm alg;
    double eta = 0;
    double gamma_prime = 0;
    int64_t list_runs = 0;
    std::vector<DistMetric> collision;
    bool verified = false;
};

DerandomizeResult derandomize_hh(const MeteredAlgorithm& alg, double eta, double gamma_prime,
                                 std::span<const FiniteDistribution> family,
                                 int64_t verify_trials, uint64_t seed,
                                 int enum_cap = kDefaultEnumCap, Exec exec = Exec::OpenMP);

// ---- replicability -> global stability ------------------------------------

// Majority amplification over T = ceil(ln(2/tau) / (2 gamma^2)) sample blocks
// with one shared tape. Requires measured shared-tape replicability
// > 1/2 + gamma on every family distribution (PreconditionFailed otherwise).
// The independent-tape collision of the result is measured against the
// 2^-budget (1 - tau) bound.
struct RepToGlobResult {
    MeteredAlgorithm alg;
    int64_t majority_runs = 0;
    double tau = 0;
    double collision_bound = 0;
    std::vector<DistMetric> shared_replicability;
    std::vector<DistMetric> independent_collision;
    bool verified = false;
};

RepToGlobResult rep_to_glob(const MeteredAlgorithm& alg, double gamma, double tau,
                            std::span<const FiniteDistribution> family,
                            int64_t trials, uint64_t seed, Exec exec = Exec::OpenMP);

// ---- global stability -> replicability (threshold selection) --------------

struct ThresholdingParams {
    int64_t threshold_count = 0;    // T = ceil((2^C - 1) / rho), at least 1
    int64_t threshold_rounded = 0;  // next power of two (tape reads)
    int bits = 0;                   // ceil(log2 T)
    double eta = 0;
    double gamma = 0;               // spacing; eta - T2*gamma >= eta/2
    double tau = 0;                 // gamma / 10
    double tau_prime = 0;           // replicability slack budget
    double rho = 0;
    int64_t estimation_runs = 0;    // N

    // gamma = eta*rho/(4T) capped at eta/(2 T2); tau = gamma/10;
    // N = 4 * ceil((9 / (2 gamma^2)) ln(2 / (beta tau')))
    static ThresholdingParams defaults(double eta, double rho, double beta, double tau_prime);
    void validate() const;
    double threshold(int64_t i) const { return eta - static_cast<double>(i + 1) * gamma; }
};

// The threshold-selection transform: estimate output frequencies from N runs
// of the deterministic input, read ceil(log2 T) tape bits to pick threshold
// i, and return the phi-min output with empirical frequency above it (bottom
// if none). Precondition: input is deterministic with measured failure rate
// <= eta/8 on every family distribution.
struct GlobToRepResult {
    MeteredAlgorithm alg;
    ThresholdingParams params;
    double replicability_bound = 0;  // (T2 - (1/eta - 1)) / T2 - tau'
    std::vector<DistMetric> shared_replicability;
    std::vector<DistMetric> confidence_pre;
};

GlobToRepResult glob_to_rep(const MeteredAlgorithm& alg, const StatisticalTask& task,
                            std::span<const FiniteDistribution> family,
                            const ThresholdingParams& params,
                            int64_t measure_trials, uint64_t seed, Exec exec = Exec::OpenMP);

// ---- generic amplification (list + derandomize + threshold) ---------------

struct AmplifyResult {
    MeteredAlgorithm alg;
    int64_t tapes_drawn = 0;       // t, rounded to a power of two
    double list_hh_weight = 0;     // nu / (2t)
    DerandomizeResult derandomized;
    GlobToRepResult thresholded;
    std::vector<DistMetric> replicability;  // final, shared tape
};

AmplifyResult amplify_replicability(const MeteredAlgorithm& alg, const StatisticalTask& task,
                                    std::span<const FiniteDistribution> family,
                                    double nu, double rho, int64_t trials, uint64_t seed,
                                    Exec exec = Exec::OpenMP);

}  // namespace stability
