#include <doctest.h>

#include <cmath>

#include "stability/algorithm.hpp"
#include "stability/compress.hpp"
#include "stability/verify.hpp"

using namespace stability;

namespace {

constexpr uint64_t kSeed = 0xBEEF5EEDull;

MeteredAlgorithm oracle_on(const FiniteDistribution& data, std::vector<double> law, int64_t n = 32) {
    int outputs = static_cast<int>(law.size());
    law.push_back(0.0);
    return make_oracle_algorithm({{data, FiniteDistribution(law)}}, n, outputs + 1);
}

MeteredAlgorithm constant_algorithm(int value, int64_t n = 4) {
    MeteredAlgorithm alg;
    alg.sample_size = n;
    alg.bit_budget = 0;
    alg.eval = [value](const Sample&, BitTape&) { return value; };
    alg.sampler = [value](const FiniteDistribution&, BitTape&, SplitMix&) { return value; };
    return alg;
}

}  // namespace

TEST_CASE("replicability of a constant algorithm is exactly one") {
    auto data = FiniteDistribution::uniform(2);
    auto rep = estimate_replicability(constant_algorithm(3), data, 5000, true, kSeed);
    CHECK(rep.estimate == 1.0);
    CHECK(rep.ci_halfwidth == doctest::Approx(std::sqrt(std::log(2000.0) / 10000.0)));
}

TEST_CASE("independent-run collision converges to sum of squared law masses") {
    auto data = FiniteDistribution::uniform(2);
    SplitMix rng(0x9A17);
    for (int rep_i = 0; rep_i < 4; ++rep_i) {
        std::vector<double> law(4);
        double left = 1.0;
        for (int i = 0; i < 3; ++i) {
            law[static_cast<size_t>(i)] = left * (0.2 + 0.6 * rng.unit());
            left -= law[static_cast<size_t>(i)];
        }
        law[3] = left;
        double collision = 0;
        for (double p : law) collision += p * p;
        auto alg = oracle_on(data, law);
        auto rep = estimate_replicability(alg, data, 120'000, false, derive_seed(kSeed, rep_i));
        CHECK(std::abs(rep.estimate - collision) <= 3 * rep.ci_halfwidth);
    }
}

TEST_CASE("serial and OpenMP estimators agree bit for bit") {
    auto data = FiniteDistribution::uniform(2);
    auto alg = oracle_on(data, {0.30, 0.25, 0.24, 0.21});
    auto a = estimate_replicability(alg, data, 20'000, false, kSeed, Exec::Serial);
    auto b = estimate_replicability(alg, data, 20'000, false, kSeed, Exec::OpenMP);
    CHECK(a.estimate == b.estimate);
    auto ha = find_heavy_hitters(alg, data, 0.25, 20'000, kSeed, 5, Exec::Serial);
    auto hb = find_heavy_hitters(alg, data, 0.25, 20'000, kSeed, 5, Exec::OpenMP);
    REQUIRE(ha.size() == hb.size());
    for (size_t i = 0; i < ha.size(); ++i) {
        CHECK(ha[i].output == hb[i].output);
        CHECK(ha[i].weight == hb[i].weight);
    }
}

TEST_CASE("heavy hitters of a point mass") {
    auto data = FiniteDistribution::uniform(2);
    auto hh = find_heavy_hitters(constant_algorithm(2), data, 0.5, 1000, kSeed, 5);
    REQUIRE(hh.size() == 1);
    CHECK(hh[0].output == 2);
    CHECK(hh[0].weight == 1.0);
}

TEST_CASE("four planted heavy hitters are recovered") {
    auto data = FiniteDistribution::uniform(2);
    auto alg = oracle_on(data, {0.30, 0.25, 0.24, 0.21});
    auto hh = find_heavy_hitters(alg, data, 0.25, 20'000, kSeed, 5);
    REQUIRE(hh.size() == 4);
    CHECK(hh[0].output == 0);  // sorted by weight
    std::set<int> outs;
    for (auto& h : hh) outs.insert(h.output);
    CHECK(outs == std::set<int>{0, 1, 2, 3});
}

TEST_CASE("no heavy hitters below threshold on a flat law") {
    auto data = FiniteDistribution::uniform(2);
    std::vector<double> law(100, 0.01);
    auto alg = oracle_on(data, law);
    auto hh = find_heavy_hitters(alg, data, 0.25, 2000, kSeed, 101);
    CHECK(hh.empty());
}

TEST_CASE("heavy hitter preconditions and list bound") {
    auto data = FiniteDistribution::uniform(2);
    auto alg = oracle_on(data, {0.5, 0.5});
    CHECK_THROWS_AS(find_heavy_hitters(alg, data, 0.25, 100, kSeed, 3), std::invalid_argument);
    auto hh = find_heavy_hitters(alg, data, 0.25, 20'000, kSeed, 3);
    CHECK(hh.size() <= static_cast<size_t>(std::ceil(1.0 / (0.25 * 0.75))));
}

TEST_CASE("confidence estimation on always-correct, partial and empty accepted sets") {
    auto data = FiniteDistribution::uniform(2);
    auto always = oracle_task(2, 4);
    auto alg = oracle_on(data, {0.9, 0.1, 0.0, 0.0});
    CHECK(estimate_confidence(alg, always, data, 2000, kSeed).failure_rate == 0.0);

    auto reject1 = oracle_task(2, 4, {1});
    auto conf = estimate_confidence(alg, reject1, data, 100'000, kSeed);
    CHECK(std::abs(conf.failure_rate - 0.1) <= 3 * conf.ci_halfwidth);

    auto none = oracle_task(2, 4, {0, 1, 2, 3});
    CHECK(estimate_confidence(alg, none, data, 2000, kSeed).failure_rate == 1.0);
}

TEST_CASE("hockey stick divergence basics") {
    FiniteDistribution p({1.0, 0.0});
    FiniteDistribution q({0.0, 1.0});
    CHECK(hockey_stick(p, q, 0.0) == 1.0);
    CHECK(hockey_stick(p, p, 0.0) == 0.0);
    CHECK(hockey_stick(p, p, 2.0) == 0.0);
    FiniteDistribution r({0.6, 0.4});
    CHECK(hockey_stick(r, r, 0.0) == 0.0);
    CHECK(hockey_stick(p, q, 5.0) == 1.0);
}

TEST_CASE("randomized response audits exactly at its design epsilon") {
    // one data bit, flip probability 1/(1+e^eps)
    const double eps = 1.0;
    const double q = 1.0 / (1.0 + std::exp(eps));
    MeteredAlgorithm rr;
    rr.sample_size = 1;
    rr.bit_budget = 10;
    rr.eval = [q](const Sample& s, BitTape& t) {
        // 10 tape bits give a dyadic approximation of the flip threshold;
        // exact at the audit level because both laws use the same table
        double u = 0;
        double cell = 0.5;
        for (int i = 0; i < 10; ++i, cell /= 2) u += cell * t.read_bit();
        int flip = u < q ? 1 : 0;
        return s.at(0) ^ flip;
    };
    auto pairs = item_neighbors(2, 1);
    REQUIRE(pairs.size() == 2);
    // dyadic flip probability actually implemented: #{k : k/1024 < q} cells
    double q10 = std::ceil(q * 1024) / 1024.0;
    double design_eps = std::log((1 - q10) / q10);
    auto audit_at = audit_dp_exact(rr, pairs, design_eps, 2);
    CHECK(audit_at.delta_max <= 1e-12);
    auto audit_below = audit_dp_exact(rr, pairs, design_eps - 0.2, 2);
    double expect = (1 - q10) - std::exp(design_eps - 0.2) * q10;
    CHECK(audit_below.delta_max == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("audit monotonicity in epsilon and identity pairs") {
    MeteredAlgorithm alg;
    alg.sample_size = 2;
    alg.bit_budget = 2;
    alg.eval = [](const Sample& s, BitTape& t) {
        return (s.at(0) + s.at(1) + static_cast<int>(t.read_bits(2))) % 3;
    };
    auto pairs = item_neighbors(2, 2);
    double last = 1e9;
    for (double eps : {0.0, 0.3, 0.8, 1.5}) {
        auto audit = audit_dp_exact(alg, pairs, eps, 3);
        CHECK(audit.delta_max <= last + 1e-15);
        CHECK(audit.delta_max >= 0.0);
        CHECK(audit.delta_max <= 1.0);
        last = audit.delta_max;
    }
    // P = Q on every pair: delta is exactly zero for any epsilon
    auto same = audit_dp_exact(constant_algorithm(0, 2), pairs, 0.0, 3);
    CHECK(same.delta_max == 0.0);
}

TEST_CASE("item neighbors enumerate ordered pairs differing in one slot") {
    auto pairs = item_neighbors(2, 2);
    CHECK(pairs.size() == 8);  // n (|X|-1) |X|^n
    for (const auto& pr : pairs) {
        auto a = pr.s.materialize();
        auto b = pr.s_prime.materialize();
        int diff = 0;
        for (size_t i = 0; i < a.size(); ++i) diff += a[i] != b[i];
        CHECK(diff == 1);
    }
    auto singles = item_neighbors(3, 1);
    CHECK(singles.size() == 6);
    CHECK_THROWS_AS(item_neighbors(2, 30), EnumerationTooLarge);
}

TEST_CASE("user-level neighbors with unit blocks coincide with item-level") {
    auto item = item_neighbors(2, 2);
    auto user = user_neighbors(2, 1, 2);
    REQUIRE(item.size() == user.size());
    std::set<std::pair<std::vector<int>, std::vector<int>>> a, b;
    for (const auto& p : item) a.insert({p.s.materialize(), p.s_prime.materialize()});
    for (const auto& p : user) b.insert({p.s.materialize(), p.s_prime.materialize()});
    CHECK(a == b);
}

TEST_CASE("user-level neighbors replace whole blocks") {
    auto pairs = user_neighbors(2, 2, 2);
    // 16 datasets, each with 2 users x 3 alternative blocks
    CHECK(pairs.size() == 16u * 6u);
    for (const auto& pr : pairs) {
        auto a = pr.s.materialize();
        auto b = pr.s_prime.materialize();
        bool u0 = a[0] != b[0] || a[1] != b[1];
        bool u1 = a[2] != b[2] || a[3] != b[3];
        CHECK(u0 != u1);
    }
}
