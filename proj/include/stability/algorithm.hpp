#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "stability/bit_tape.hpp"
#include "stability/finite_distribution.hpp"
#include "stability/sample.hpp"

namespace stability {

// Output distribution of an algorithm, with provenance: exact (enumerated or
// closed form) or estimated, and a bound on how far the stored law can be
// from the true one in total variation.
struct OutputLaw {
    FiniteDistribution law;
    bool exact = true;
    double error_bound = 0.0;
};

// A deterministic map (sample, bit tape) -> output index, with a declared
// sample size and bit budget. eval is the ground truth; the two optional
// hooks exist so transforms stay analyzable and measurable at scale:
//
//   tape_laws(D)[r] — the exact output law of eval on D^n-samples conditioned
//     on tape r (2^budget entries). Oracles declare these; transforms
//     propagate them when the composition has a closed form.
//   sampler(D, tape, rng) — draws eval's output on a fresh D^n sample using
//     rng for the sample-side randomness; must be equal in distribution to
//     eval(sample(D, n, seed), tape). Cross-checked against eval in tests.
//
// When sampler is unset, run_on_fresh_sample falls back to a literal eval.
struct MeteredAlgorithm {
    int64_t sample_size = 0;
    int bit_budget = 0;
    std::function<int(const Sample&, BitTape&)> eval;
    std::function<std::vector<OutputLaw>(const FiniteDistribution&)> tape_laws;
    std::function<int(const FiniteDistribution&, BitTape&, SplitMix&)> sampler;

    bool deterministic() const { return bit_budget == 0; }
};

// One run on a fresh sample from dist. Preference order: exact per-tape laws
// (one categorical draw; the tape is consumed for its full budget), then the
// fast sampler, then a literal eval on a freshly seeded sample stream. All
// three are equal in distribution.
int run_on_fresh_sample(const MeteredAlgorithm& alg,
                        const std::shared_ptr<const FiniteDistribution>& dist,
                        BitTape& tape, SplitMix& rng);

// Wraps a tape_laws function with a fingerprint-keyed cache; transform
// compositions call their inputs' laws per trial, so memoization keeps the
// law path cheap. Thread safe.
std::function<std::vector<OutputLaw>(const FiniteDistribution&)> cache_tape_laws(
    std::function<std::vector<OutputLaw>(const FiniteDistribution&)> fn);

// Marginal output law on dist (average of tape_laws), when available.
std::optional<OutputLaw> marginal_law(const MeteredAlgorithm& alg, const FiniteDistribution& dist);

// Mock algorithm with an exactly known output law per data distribution.
// Deterministic (budget 0): its randomness is attributed to the sample, so
// transforms see it as the paper's deterministic algorithm. Evaluating on a
// sample from a distribution outside the map throws UnknownDistribution.
MeteredAlgorithm make_oracle_algorithm(
    std::vector<std::pair<FiniteDistribution, FiniteDistribution>> law_per_distribution,
    int64_t sample_size, int output_domain_size);

// Randomized variant: the law additionally depends on the tape (2^bits laws
// per distribution, indexed by the tape integer).
MeteredAlgorithm make_tape_oracle_algorithm(
    std::vector<std::pair<FiniteDistribution, std::vector<FiniteDistribution>>> laws_per_distribution,
    int64_t sample_size, int bits, int output_domain_size);

// Deterministic reference algorithm (not an oracle): phi-minimal most
// frequent element of the sample, as an output index. Stability on D equals
// the concentration of the empirical mode.
MeteredAlgorithm make_sample_mode_algorithm(int64_t sample_size);

}  // namespace stability
