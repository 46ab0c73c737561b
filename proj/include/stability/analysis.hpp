#pragma once

#include <optional>
#include <vector>

#include "stability/algorithm.hpp"

namespace stability {

// phi-minimal index of maximal count.
int phi_min_argmax(const std::vector<int64_t>& counts);

// Law of the phi-min-tie mode of m i.i.d. draws from base. Exact via a
// closed-form binomial tail when at most two outputs carry mass, or a
// constrained-multinomial DP when the working size K^2 m^3 fits work_cap.
// Returns nullopt when neither route is feasible.
std::optional<OutputLaw> mode_of_iid_law(const FiniteDistribution& base, int64_t m,
                                         int64_t work_cap = 200'000'000);

// Law of the two-stage derandomization on D^n-samples: per tape r, the
// phi-min mode of m runs of the base algorithm on shared sample blocks; then
// the phi-min plurality across tapes. The blocks are shared, so per-tape
// modes are coupled through the sample; with at most two active outputs the
// coupling is nested (per-tape success counts are prefix counts of one
// uniform draw) and the law reduces to a single binomial tail. Returns
// nullopt for wider supports.
std::optional<OutputLaw> derandomized_law(const std::vector<OutputLaw>& tape_laws, int64_t m);

// Exact binomial tail Pr[Bin(n, p) >= k].
double binomial_tail_geq(int64_t n, double p, int64_t k);

// Predicted behaviour of the threshold-selection transform on a known output
// law: per threshold, the limit output for exact frequency estimates and a
// Hoeffding bound on the probability the empirical candidate set deviates.
// collision conditioned on threshold i is at least (1 - deviation_bound)^2,
// giving a certified band the Monte-Carlo estimate must land in.
struct ThresholdPrediction {
    double threshold = 0;
    int limit_output = -1;          // phi-min above threshold, or bottom
    double deviation_bound = 0;     // Pr[empirical set differs], Hoeffding
};

struct ThresholdAnalysis {
    std::vector<ThresholdPrediction> per_threshold;
    double replicability_lo = 0;
    double replicability_hi = 1;
};

ThresholdAnalysis threshold_analysis(const FiniteDistribution& law, double eta, double gamma,
                                     int64_t thresholds, int64_t estimation_runs, int bottom);

}  // namespace stability
