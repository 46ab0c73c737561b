#pragma once

#include <span>

#include "stability/algorithm.hpp"
#include "stability/compress.hpp"
#include "stability/task.hpp"
#include "stability/transforms_rep.hpp"
#include "stability/verify.hpp"

namespace stability {

// Multiset of outputs feeding private selection.
struct SelectionDataset {
    std::vector<int64_t> counts;  // multiplicity per output index
    int64_t total = 0;
    int64_t gap_bound = 0;        // t = ceil(4 ln(1/delta) / epsilon)

    static SelectionDataset from_counts(std::vector<int64_t> counts, double epsilon, double delta);
    int mode() const;  // phi-min maximal-count output
};

inline int64_t selection_gap(double epsilon, double delta) {
    return static_cast<int64_t>(std::ceil(4.0 * std::log(1.0 / delta) / epsilon));
}

// Gap-truncated exponential mechanism: candidates are outputs within
// gap_bound of the mode, weighted exp(epsilon * count / 2), then compressed
// to ceil(log2 |candidates|) + ceil(log2(2/delta)) random bits. The output is
// always within gap_bound of the mode, with probability 1 over the full tape
// space. Privacy is discharged by audit_dp_exact, not assumed.
int dp_select(const SelectionDataset& data, double epsilon, double delta, BitTape& tape);

// Exact post-compression output law of dp_select on this dataset.
FiniteDistribution dp_select_law(const SelectionDataset& data, double epsilon, double delta,
                                 int output_domain_size);

// Bits dp_select may read for any dataset with at most max_candidates
// distinct candidates.
int dp_select_budget(int64_t max_candidates, double delta);

struct DpPipelineParams {
    double epsilon = 1.0;
    double delta = 0.05;
    double eta = 0.5;    // input stability
    double beta = 0.05;  // input confidence target (sizes the list stage)
    int64_t users = 0;   // T
    int64_t list_runs = 0;
    int dummy = 0;       // phi-minimal output
    double c1 = 8.0;

    // users = ceil(c1 2^C ln(1/delta) / epsilon) for C = ceil(log2(1/eta));
    // list_runs = ceil(2 ln(1/beta) / eta^2). Both may be overridden before
    // calling stab_to_dp (the exhaustive audit instances need small blocks).
    static DpPipelineParams defaults(double epsilon, double delta, double eta, double beta);
};

// Stability -> user-level DP: one user contributes one full input sample to
// the list stage (phi-min mode of list_runs runs of the deterministic input);
// the dataset of T user outputs plus gap_bound dummy copies goes through
// dp_select. Support on any fixed input has at most users + 1 elements.
struct StabToDpResult {
    MeteredAlgorithm alg;
    DpPipelineParams params;
    int64_t user_block = 0;   // elements per user
    int64_t dummy_copies = 0;
    int declared_bits = 0;
    double beta_prime_bound = 0;  // T (2 beta / eta)^(t/4)
};

StabToDpResult stab_to_dp(const MeteredAlgorithm& alg, const StatisticalTask& task,
                          std::span<const FiniteDistribution> family, DpPipelineParams params,
                          int64_t check_trials, uint64_t seed, Exec exec = Exec::OpenMP);

// Empirical checks of the stab_to_dp contracts on one distribution:
// bounded support over every enumerated input and the strong-correctness rate
// over sampled inputs.
struct StabToDpChecks {
    int64_t max_support = 0;
    int64_t inputs_enumerated = 0;
    double support_violation_rate = 0;  // fraction of sampled S with Supp outside G_D
    int64_t sampled = 0;
};

StabToDpChecks check_stab_to_dp(const StabToDpResult& mech, const StatisticalTask& task,
                                const FiniteDistribution& dist, int domain_size,
                                int64_t sampled_inputs, uint64_t seed,
                                int enum_cap = kDefaultEnumCap);

// DP -> stability: searches sampled inputs for one whose tape-enumerated
// support captures at least 1/(2 e^{1/2}) - tolerance of the marginal law,
// extracts the heaviest support element and derandomizes around it.
struct DpToStabResult {
    bool found = false;
    double best_observed_mass = 0;
    double support_mass = 0;       // for the accepted witness
    HeavyHitter extracted;
    DerandomizeResult derandomized;
    int witness_index = -1;
};

DpToStabResult dp_to_stab(const MeteredAlgorithm& alg, const FiniteDistribution& dist,
                          int64_t users, double epsilon, double delta, double c2,
                          int search_budget, int64_t trials, double tolerance, uint64_t seed,
                          int output_domain_size, int enum_cap = kDefaultEnumCap,
                          Exec exec = Exec::OpenMP);

// Empirical perfect-generalization check: the canonical distribution is the
// marginal law A(., .); reports the fraction of sampled inputs whose exact
// conditional law is farther than (epsilon, delta) from it in either
// direction. Passes iff the fraction is at most beta.
struct PerfectGeneralizationReport {
    double fail_fraction = 0;
    int64_t inputs = 0;
    double beta = 0, epsilon = 0, delta = 0;
    bool pass = false;
};

PerfectGeneralizationReport check_perfect_generalization(const MeteredAlgorithm& alg,
                                                         const FiniteDistribution& dist,
                                                         double epsilon, double delta, double beta,
                                                         int64_t inputs, int64_t marginal_trials,
                                                         uint64_t seed, int output_domain_size,
                                                         int enum_cap = kDefaultEnumCap,
                                                         Exec exec = Exec::OpenMP);

}  // namespace stability
