#pragma once

#include <atomic>
#include <span>

#include "stability/algorithm.hpp"
#include "stability/task.hpp"
#include "stability/transforms_rep.hpp"

namespace stability {

// Finite hypothesis class over X = {0..domain_size-1}; hypotheses are label
// bitmasks (bit x = h(x)). VC dimension is computed by brute-force shattering
// for domain_size <= 16.
struct HypothesisClass {
    int domain_size = 0;
    std::vector<uint64_t> hypotheses;
    int vc_dim = 0;

    int size() const { return static_cast<int>(hypotheses.size()); }
    int label(int h, int x) const { return static_cast<int>((hypotheses[static_cast<size_t>(h)] >> x) & 1); }

    static HypothesisClass from_masks(int domain_size, std::vector<uint64_t> masks);
    static HypothesisClass thresholds(int domain_size);  // h_k(x) = [x >= k], k = 0..domain_size
    static HypothesisClass intervals(int domain_size);   // h_{a,b}(x) = [a <= x < b]
};

int compute_vc_dimension(int domain_size, const std::vector<uint64_t>& hypotheses);

// Saturating Sauer-Shelah bound sum_{i<=vc} C(n, i).
int64_t sauer_bound(int64_t n, int vc);

// Distribution over labeled examples, stored as a FiniteDistribution over
// ids 2x + label.
struct LabeledDistribution {
    FiniteDistribution joint;
    int domain_size = 0;

    LabeledDistribution(FiniteDistribution j, int xs) : joint(std::move(j)), domain_size(xs) {}

    // Uniform x; label = truth(x) flipped with probability noise.
    static LabeledDistribution noisy(const HypothesisClass& cls, int truth_index, double noise);

    double marginal_x(int x) const { return joint.prob(2 * x) + joint.prob(2 * x + 1); }
};

// Exact expected error of h under D.
double true_error(const HypothesisClass& cls, int h, const LabeledDistribution& dist);
double optimal_error(const HypothesisClass& cls, const LabeledDistribution& dist);

// Labeled sample as a histogram over ids 2x + label. All PAC operations only
// depend on samples through these counts, so fast paths may draw them as one
// multinomial.
struct LabeledHistogram {
    std::vector<int64_t> counts;  // size 2 * domain_size
    int64_t n = 0;
};

double empirical_error(const HypothesisClass& cls, int h, const LabeledHistogram& s);

// Distinct restrictions of the class to the support of the unlabeled counts,
// as (labeling mask over support positions). Cardinality is asserted against
// the Sauer bound at the sample size.
std::vector<uint64_t> all_labelings(const HypothesisClass& cls,
                                    const std::vector<int64_t>& unlabeled_counts,
                                    int64_t sample_size);

// Plug-in interface for the realizable list learner: given a labeled
// histogram, return hypothesis indices. nu is the declared heavy-hitter
// weight of the list, list_bound the declared size cap.
struct RealizableListLearner {
    int64_t sample_size = 0;
    double nu = 1.0;
    int list_bound = 0;
    std::function<std::vector<int>(const LabeledHistogram&)> learn;
};

// Finite-class stand-in: all hypotheses with empirical error <= alpha/2 on a
// sample of ceil((ln|H| + ln(1/beta)) / (alpha/8)) points; nu = 1.
RealizableListLearner default_realizable_list_learner(const HypothesisClass& cls, double alpha,
                                                      double beta);

// PAC statistical task: outputs are hypothesis indices plus bottom; accepted
// iff err_D(h) <= OPT_D + alpha.
StatisticalTask pac_task(std::shared_ptr<const HypothesisClass> cls, double alpha);

struct AgnosticReduceResult {
    MeteredAlgorithm alg;
    int64_t unlabeled_samples = 0;  // T
    int64_t unlabeled_size = 0;     // per-sample size n(alpha/8, nu/8)
    int64_t labeled_size = 0;       // pruning sample
    int64_t prune_count_min = 0;    // c' nu T with c' = 1/2
    int64_t pruned_cap = 0;         // min(|H|, (2/nu) * Sauer bound)
    double nu = 1.0;
    std::shared_ptr<std::atomic<int64_t>> pruned_high_water;  // max |Pruned| observed
};

// Pruning rule shared by the reduction: keep candidates with multiplicity at
// least prune_min whose empirical error is within (3/4) alpha of the best
// candidate. Exposed for direct invariant checks.
std::vector<int> prune_candidates(const HypothesisClass& cls, const std::vector<int64_t>& counts,
                                  int64_t prune_min, const LabeledHistogram& labeled, double alpha);

// The all-labelings agnostic reduction: T unlabeled samples, learner run on
// every distinct labeling of each, candidates pruned by empirical error
// (<= min + (3/4) alpha) and multiplicity (>= c' nu T), and a uniform
// candidate selected with ceil(log2 |Pruned|) tape bits. Output is bottom
// when the pruned set is empty.
AgnosticReduceResult agnostic_reduce(const HypothesisClass& cls, const RealizableListLearner& learner,
                                     double alpha, double beta);

struct AgnosticLearnerResult {
    MeteredAlgorithm alg;
    AgnosticReduceResult reduce;
    double hh_weight = 0;          // measured heavy hitter of the reduce stage
    int64_t max_pruned_seen = 0;
    DerandomizeResult derandomized;
    GlobToRepResult thresholded;
    int bits_used = 0;
    int bits_budget_formula = 0;   // ceil(log2(2 max_pruned / nu)) + ceil(log2(1/rho)) + 1
};

struct AgnosticLearnerTuning {
    int64_t hh_trials = 4000;
    int64_t measure_trials = 128;
    int64_t estimation_runs = 96;  // overrides the threshold stage's N
    double gamma_prime_scale = 0.25;
};

AgnosticLearnerResult agnostic_replicable_learner(std::shared_ptr<const HypothesisClass> cls,
                                                  double alpha, double beta, double rho,
                                                  const LabeledDistribution& dist, uint64_t seed,
                                                  const AgnosticLearnerTuning& tuning = {},
                                                  Exec exec = Exec::OpenMP);

}  // namespace stability
