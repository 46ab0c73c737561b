#include <doctest.h>

#include <cmath>
#include <set>

#include "stability/pac.hpp"
#include "stability/verify.hpp"

using namespace stability;

namespace {

constexpr uint64_t kSeed = 0x9AC5EEDull;

LabeledHistogram histogram_from(const LabeledDistribution& dist, int64_t n, uint64_t seed) {
    LabeledHistogram h;
    h.counts.assign(static_cast<size_t>(2 * dist.domain_size), 0);
    h.n = n;
    SplitMix rng(seed);
    for (int64_t i = 0; i < n; ++i) ++h.counts[static_cast<size_t>(dist.joint.sample(rng))];
    return h;
}

}  // namespace

TEST_CASE("vc dimension by brute force on the standard classes") {
    CHECK(HypothesisClass::thresholds(16).vc_dim == 1);
    CHECK(HypothesisClass::thresholds(16).size() == 17);
    CHECK(HypothesisClass::intervals(8).vc_dim == 2);
    CHECK(HypothesisClass::from_masks(4, {0b1010}).vc_dim == 0);
    // all labelings of 3 points shatter everything
    CHECK(HypothesisClass::from_masks(3, {0, 1, 2, 3, 4, 5, 6, 7}).vc_dim == 3);
    CHECK_THROWS_AS(HypothesisClass::from_masks(4, {1, 1}), std::invalid_argument);
}

TEST_CASE("sauer bound values") {
    CHECK(sauer_bound(10, 0) == 1);
    CHECK(sauer_bound(10, 1) == 11);
    CHECK(sauer_bound(10, 2) == 56);
    CHECK(sauer_bound(5, 5) == 32);
}

TEST_CASE("exact errors: truth, complement, and planted noise") {
    auto cls = HypothesisClass::from_masks(4, {0b0011, 0b1100});
    auto clean = LabeledDistribution::noisy(cls, 0, 0.0);
    CHECK(true_error(cls, 0, clean) == 0.0);
    CHECK(true_error(cls, 1, clean) == 1.0);  // complement labels everywhere

    auto thresholds = HypothesisClass::thresholds(16);
    auto noisy = LabeledDistribution::noisy(thresholds, 8, 0.1);
    CHECK(true_error(thresholds, 8, noisy) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(optimal_error(thresholds, noisy) == doctest::Approx(0.1).epsilon(1e-12));
    // moving the threshold by one costs 1/16 * 0.8
    CHECK(true_error(thresholds, 9, noisy) == doctest::Approx(0.1 + 0.05).epsilon(1e-9));
}

TEST_CASE("empirical error on labeled histograms") {
    auto cls = HypothesisClass::thresholds(4);
    LabeledHistogram s;
    s.counts = {0, 3, 2, 0, 1, 0, 0, 4};  // x=0: 3 ones; x=1: 2 zeros; x=2: 1 zero; x=3: 4 ones
    s.n = 10;
    // h_0 labels everything 1: errors are the zero-label counts = 3
    CHECK(empirical_error(cls, 0, s) == doctest::Approx(0.3));
    // h_4 labels everything 0: errors are the one-label counts = 7
    CHECK(empirical_error(cls, 4, s) == doctest::Approx(0.7));
}

TEST_CASE("all_labelings: singleton, thresholds, and the Sauer assertion") {
    auto single = HypothesisClass::from_masks(6, {0b101010});
    std::vector<int64_t> full(6, 5);
    CHECK(all_labelings(single, full, 30).size() == 1);

    auto thresholds = HypothesisClass::thresholds(16);
    std::vector<int64_t> support16(16, 2);
    auto pats = all_labelings(thresholds, support16, 32);
    CHECK(pats.size() == 17);  // n + 1 on n distinct points

    // random classes never exceed the bound (checked inside all_labelings)
    SplitMix rng(kSeed);
    for (int rep = 0; rep < 20; ++rep) {
        std::set<uint64_t> seen;
        for (int h = 0; h < 12; ++h) seen.insert(rng() & 0xFFu);
        auto cls = HypothesisClass::from_masks(8, {seen.begin(), seen.end()});
        std::vector<int64_t> counts(8, 0);
        for (int x = 0; x < 8; ++x) counts[static_cast<size_t>(x)] = rng() % 3;
        counts[rng() % 8] += 1;
        int64_t n = 0;
        for (auto c : counts) n += c;
        CHECK_NOTHROW(all_labelings(cls, counts, std::max<int64_t>(n, 1)));
    }
}

TEST_CASE("default realizable list learner keeps the truth and can be vacuous") {
    auto cls = HypothesisClass::thresholds(16);
    auto learner = default_realizable_list_learner(cls, 0.1, 0.05);
    CHECK(learner.nu == 1.0);
    CHECK(learner.list_bound == cls.size());

    auto clean = LabeledDistribution::noisy(cls, 8, 0.0);
    int hits = 0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
        auto s = histogram_from(clean, learner.sample_size, derive_seed(kSeed, t));
        for (int h : learner.learn(s))
            if (h == 8) ++hits;
    }
    CHECK(hits >= trials * 0.95);

    // threshold at alpha = 2 admits every hypothesis
    auto vacuous = default_realizable_list_learner(cls, 2.0, 0.05);
    auto s = histogram_from(clean, vacuous.sample_size, kSeed);
    CHECK(vacuous.learn(s).size() == static_cast<size_t>(cls.size()));

    // singleton class returns its only member on realizable data
    auto one = HypothesisClass::from_masks(4, {0b0110});
    auto lone = default_realizable_list_learner(one, 0.2, 0.05);
    auto clean1 = LabeledDistribution::noisy(one, 0, 0.0);
    auto s1 = histogram_from(clean1, lone.sample_size, kSeed);
    CHECK(lone.learn(s1) == std::vector<int>{0});
}

TEST_CASE("pruning soundness under the uniform convergence event") {
    // Build an exactly-convergent labeled histogram (counts proportional to
    // the distribution) and check every survivor is alpha-optimal.
    auto cls = HypothesisClass::thresholds(16);
    const double alpha = 0.15;
    auto noisy = LabeledDistribution::noisy(cls, 8, 0.1);
    const int64_t n = 16000;
    LabeledHistogram sl;
    sl.counts.assign(32, 0);
    sl.n = n;
    for (int id = 0; id < 32; ++id)
        sl.counts[static_cast<size_t>(id)] =
            static_cast<int64_t>(std::llround(noisy.joint.prob(id) * static_cast<double>(n)));

    std::vector<int64_t> w(static_cast<size_t>(cls.size()), 36);  // all candidates present
    auto pruned = prune_candidates(cls, w, 18, sl, alpha);
    REQUIRE(!pruned.empty());
    double opt = optimal_error(cls, noisy);
    for (int h : pruned) CHECK(true_error(cls, h, noisy) <= opt + alpha + 1e-9);
    // below the multiplicity floor nothing survives
    std::vector<int64_t> low(static_cast<size_t>(cls.size()), 3);
    CHECK(prune_candidates(cls, low, 18, sl, alpha).empty());
}

TEST_CASE("pac task accepts exactly the alpha-optimal hypotheses") {
    auto cls = std::make_shared<const HypothesisClass>(HypothesisClass::thresholds(16));
    auto task = pac_task(cls, 0.15);
    auto noisy = LabeledDistribution::noisy(*cls, 8, 0.1);
    CHECK(is_correct(task, noisy.joint, 8));
    CHECK(is_correct(task, noisy.joint, 9));         // 0.15 within alpha
    CHECK_FALSE(is_correct(task, noisy.joint, 12));  // 0.3 beyond alpha
    CHECK_FALSE(is_correct(task, noisy.joint, task.bottom));
}

TEST_CASE("agnostic reduce: realizable data is learned with low failure rate") {
    auto cls = HypothesisClass::thresholds(16);
    auto learner = default_realizable_list_learner(cls, 0.15 / 8, 1.0 / 8);
    auto res = agnostic_reduce(cls, learner, 0.15, 0.05);
    CHECK(res.unlabeled_samples == 36);
    CHECK(res.prune_count_min == 18);

    auto clsp = std::make_shared<const HypothesisClass>(cls);
    auto task = pac_task(clsp, 0.15);
    auto clean = LabeledDistribution::noisy(cls, 8, 0.0);
    auto conf = estimate_confidence(res.alg, task, clean.joint, 2000, kSeed);
    CHECK(conf.failure_rate <= 0.05 + conf.ci_halfwidth);
}

TEST_CASE("agnostic reduce under 0.1 label noise stays alpha-optimal") {
    auto cls = HypothesisClass::thresholds(16);
    auto learner = default_realizable_list_learner(cls, 0.15 / 8, 1.0 / 8);
    auto res = agnostic_reduce(cls, learner, 0.15, 0.05);

    auto clsp = std::make_shared<const HypothesisClass>(cls);
    auto task = pac_task(clsp, 0.15);
    auto noisy = LabeledDistribution::noisy(cls, 8, 0.1);
    auto conf = estimate_confidence(res.alg, task, noisy.joint, 2000, kSeed);
    CHECK(conf.failure_rate <= 0.05 + conf.ci_halfwidth);

    // the reduce has a measured heavy hitter at least nu / (2 |Pruned|)
    auto hh = find_heavy_hitters(res.alg, noisy.joint, 0.08, 10'000, kSeed, cls.size() + 1);
    REQUIRE(!hh.empty());
    int64_t pruned_seen = std::max<int64_t>(res.pruned_high_water->load(), 1);
    CHECK(hh[0].weight >= res.nu / (2.0 * static_cast<double>(pruned_seen)));
    CHECK(pruned_seen <= res.pruned_cap);
}

TEST_CASE("the optimal hypothesis accumulates at least c' nu T candidate hits") {
    // Independent re-implementation of the candidate counting loop.
    auto cls = HypothesisClass::thresholds(16);
    const double alpha = 0.15, beta = 0.05;
    auto learner = default_realizable_list_learner(cls, alpha / 8, 1.0 / 8);
    auto noisy = LabeledDistribution::noisy(cls, 8, 0.1);
    const int64_t T = 36;
    const int trials = 100;
    int good = 0;
    for (int t = 0; t < trials; ++t) {
        int64_t w8 = 0;
        for (int64_t i = 0; i < T; ++i) {
            auto su = histogram_from(noisy, learner.sample_size,
                                     derive_seed(kSeed, 1000 * t + static_cast<int>(i)));
            std::vector<int64_t> ux(16, 0);
            for (int x = 0; x < 16; ++x)
                ux[static_cast<size_t>(x)] = su.counts[static_cast<size_t>(2 * x)] +
                                             su.counts[static_cast<size_t>(2 * x + 1)];
            auto pats = all_labelings(cls, ux, learner.sample_size);
            std::vector<int> support;
            for (int x = 0; x < 16; ++x)
                if (ux[static_cast<size_t>(x)] > 0) support.push_back(x);
            for (uint64_t pat : pats) {
                LabeledHistogram lh;
                lh.counts.assign(32, 0);
                lh.n = 0;
                for (size_t k = 0; k < support.size(); ++k) {
                    int x = support[k];
                    int lab = static_cast<int>((pat >> k) & 1);
                    lh.counts[static_cast<size_t>(2 * x + lab)] = ux[static_cast<size_t>(x)];
                    lh.n += ux[static_cast<size_t>(x)];
                }
                for (int h : learner.learn(lh))
                    if (h == 8) ++w8;
            }
        }
        if (w8 >= 18) ++good;  // c' nu T = 18
    }
    CHECK(static_cast<double>(good) / trials >= 1.0 - beta / 2 - 0.05);
}

TEST_CASE("agnostic replicable learner on a singleton class is free") {
    auto cls = std::make_shared<const HypothesisClass>(HypothesisClass::from_masks(4, {0b0011}));
    auto clean = LabeledDistribution::noisy(*cls, 0, 0.0);
    AgnosticLearnerTuning tuning;
    tuning.hh_trials = 2000;
    tuning.measure_trials = 64;
    tuning.estimation_runs = 24;
    auto res = agnostic_replicable_learner(cls, 0.2, 0.05, 0.4, clean, kSeed, tuning);
    CHECK(res.bits_used == 0);
    REQUIRE(res.thresholded.shared_replicability.size() == 1);
    CHECK(res.thresholded.shared_replicability[0].value == 1.0);
}

TEST_CASE("agnostic replicable learner end to end on noisy thresholds") {
    auto cls = std::make_shared<const HypothesisClass>(HypothesisClass::thresholds(16));
    auto noisy = LabeledDistribution::noisy(*cls, 8, 0.1);
    AgnosticLearnerTuning tuning;
    tuning.hh_trials = 4000;
    tuning.measure_trials = 48;
    tuning.estimation_runs = 48;
    auto res = agnostic_replicable_learner(cls, 0.15, 0.05, 0.4, noisy, kSeed, tuning);
    REQUIRE(res.thresholded.shared_replicability.size() == 1);
    CHECK(res.thresholded.shared_replicability[0].value >= 0.55);
    CHECK(res.bits_used <= res.bits_budget_formula);
    CHECK(res.max_pruned_seen <= res.reduce.pruned_cap);
}
