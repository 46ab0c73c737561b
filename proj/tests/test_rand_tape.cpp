#include <doctest.h>

#include <cmath>
#include <set>

#include "stability/algorithm.hpp"
#include "stability/compress.hpp"
#include "stability/verify.hpp"

using namespace stability;

TEST_CASE("empty tape errors on any read") {
    BitTape t = fresh_tape(1, 2, 0);
    CHECK(t.budget() == 0);
    CHECK_THROWS_AS(t.read_bit(), TapeExhausted);
}

TEST_CASE("fresh_tape is deterministic in (seed, stream)") {
    BitTape a = fresh_tape(123, 7, 64);
    BitTape b = fresh_tape(123, 7, 64);
    CHECK(a.bits() == b.bits());
    BitTape c = fresh_tape(123, 8, 64);
    CHECK(a.bits() != c.bits());
}

TEST_CASE("fresh_tape bit positions are unbiased") {
    const int tapes = 100'000, len = 32;
    std::vector<int64_t> ones(len, 0);
    for (int i = 0; i < tapes; ++i) {
        BitTape t = fresh_tape(0xABCDEF, static_cast<uint64_t>(i), len);
        for (int j = 0; j < len; ++j) ones[static_cast<size_t>(j)] += t.read_bit();
    }
    for (int j = 0; j < len; ++j) {
        double mean = static_cast<double>(ones[static_cast<size_t>(j)]) / tapes;
        CHECK(std::abs(mean - 0.5) <= 0.01);
    }
}

TEST_CASE("budget metering errors deterministically at budget + 1") {
    BitTape t = fresh_tape(9, 9, 5);
    for (int i = 0; i < 5; ++i) CHECK_NOTHROW(t.read_bit());
    CHECK_THROWS_AS(t.read_bit(), TapeExhausted);
    CHECK_THROWS_AS(t.read_bit(), TapeExhausted);
}

TEST_CASE("tape enumeration is lexicographic and complete") {
    std::vector<std::vector<uint8_t>> seen;
    for_each_tape(1, [&](BitTape& t) { seen.push_back(t.bits()); });
    CHECK(seen == std::vector<std::vector<uint8_t>>{{0}, {1}});

    seen.clear();
    for_each_tape(3, [&](BitTape& t) { seen.push_back(t.bits()); });
    CHECK(seen.size() == 8);
    for (size_t i = 0; i + 1 < seen.size(); ++i) CHECK(seen[i] < seen[i + 1]);

    uint64_t count = 0;
    for_each_tape(20, [&](BitTape&) { ++count; });
    CHECK(count == (1u << 20));
    CHECK(TapeRange(20).count() == (1u << 20));

    CHECK_THROWS_AS(for_each_tape(25, [](BitTape&) {}), EnumerationTooLarge);
    CHECK_THROWS_AS(TapeRange(30), EnumerationTooLarge);
}

TEST_CASE("collapsed enumeration weights unread suffixes") {
    // reads one bit, so each prefix stands for 2^(l-1) tapes
    int calls = 0;
    uint64_t weight = 0;
    for_each_tape_collapsed(10, [&](BitTape& t) {
        ++calls;
        t.read_bit();
        weight += 1u << (10 - t.cursor());
        return t.cursor();
    });
    CHECK(calls == 2);
    CHECK(weight == 1024);
}

TEST_CASE("dyadic distributions compress exactly") {
    FiniteDistribution base({0.5, 0.25, 0.25});
    auto cs = compress_distribution(base, 2);
    CHECK(cs.tv_exact == 0);
    CHECK(cs.induced == base);
}

TEST_CASE("floor-then-mode rule on the uniform third") {
    std::vector<Rational> third{Rational(1, 3), Rational(1, 3), Rational(1, 3)};
    auto cs = compress_distribution_exact(third, 4);
    CHECK(cs.induced.prob(0) == 6.0 / 16);
    CHECK(cs.induced.prob(1) == 5.0 / 16);
    CHECK(cs.induced.prob(2) == 5.0 / 16);
    CHECK(cs.tv_exact == Rational(1, 24));
}

TEST_CASE("compression bit formula meets the tv target on random bases") {
    SplitMix rng(0x51AB);
    for (int rep = 0; rep < 100; ++rep) {
        int support = 2 + static_cast<int>(rng() % 15);
        std::vector<Rational> probs;
        int64_t total = 0;
        std::vector<int64_t> w(static_cast<size_t>(support));
        for (auto& x : w) {
            x = 1 + static_cast<int64_t>(rng() % 1000);
            total += x;
        }
        for (auto x : w) probs.push_back(Rational(x, total));
        for (double eta : {0.25, 0.0625}) {
            int k = ceil_log2(static_cast<uint64_t>(support)) +
                    static_cast<int>(std::ceil(std::log2(1.0 / eta)));
            auto cs = compress_distribution_exact(probs, k);
            CHECK(cs.tv_exact <= exact_rational(eta));
            for (int cell : cs.cell_target) CHECK(probs[static_cast<size_t>(cell)] > 0);
        }
    }
}

TEST_CASE("compression invariants: total mass, subset support, tv bound") {
    SplitMix rng(0xFEED);
    for (int rep = 0; rep < 50; ++rep) {
        int support = 2 + static_cast<int>(rng() % 7);
        std::vector<int64_t> w(static_cast<size_t>(support));
        int64_t total = 0;
        for (auto& x : w) {
            x = rng() % 100;  // zeros allowed
            total += x;
        }
        if (total == 0) {
            w[0] = 1;
            total = 1;
        }
        std::vector<Rational> probs;
        int nonzero = 0;
        for (auto x : w) {
            probs.push_back(Rational(x, total));
            nonzero += x > 0;
        }
        int k = ceil_log2(static_cast<uint64_t>(std::max(nonzero, 1))) + 2 +
                static_cast<int>(rng() % 4);
        auto cs = compress_distribution_exact(probs, k);
        CHECK(static_cast<int>(cs.cell_target.size()) == (1 << k));
        Rational cell_mass(1, int64_t{1} << k);
        Rational sum(0);
        for (int i = 0; i < cs.induced.size(); ++i) sum += exact_rational(cs.induced.prob(i));
        CHECK(sum == Rational(1));
        for (int cell : cs.cell_target) CHECK(probs[static_cast<size_t>(cell)] > 0);
        CHECK(cs.tv_exact <= Rational(nonzero, int64_t{1} << k));
    }
}

TEST_CASE("compression below the minimum bit count names the bound") {
    FiniteDistribution base = FiniteDistribution::uniform(5);
    CHECK_THROWS_WITH_AS(compress_distribution(base, 2),
                         doctest::Contains("ceil(log2 |Supp|)"), std::invalid_argument);
}

TEST_CASE("exact law over tapes: deterministic algorithm gives a point mass") {
    auto data = FiniteDistribution::uniform(2);
    auto alg = make_oracle_algorithm({{data, FiniteDistribution({0.3, 0.7, 0.0})}}, 16, 3);
    auto dp = std::make_shared<const FiniteDistribution>(data);
    Sample s = sample(dp, alg.sample_size, 77);
    auto law = exact_law_over_tapes(alg, s, 3);
    CHECK(law.law.support().size() == 1);
    BitTape t;
    CHECK(law.law.prob(alg.eval(s, t)) == 1.0);
}

TEST_CASE("exact law over tapes: tape-as-integer is uniform over 8 outputs") {
    MeteredAlgorithm alg;
    alg.sample_size = 1;
    alg.bit_budget = 3;
    alg.eval = [](const Sample&, BitTape& t) { return static_cast<int>(t.read_bits(3)); };
    auto dp = std::make_shared<const FiniteDistribution>(FiniteDistribution::uniform(2));
    auto law = exact_law_over_tapes(alg, sample(dp, 1, 1), 8);
    for (int y = 0; y < 8; ++y) CHECK(law.law.prob(y) == 0.125);
}

TEST_CASE("exact law over tapes matches a Monte-Carlo cross-check") {
    // majority of three coin draws, where two of the coins come from the tape
    MeteredAlgorithm alg;
    alg.sample_size = 8;
    alg.bit_budget = 2;
    alg.eval = [](const Sample& s, BitTape& t) {
        SplitMix rng(s.entropy_seed());
        int ones = (rng.unit() < 0.7 ? 1 : 0) + t.read_bit() + t.read_bit();
        return ones >= 2 ? 1 : 0;
    };
    auto data = std::make_shared<const FiniteDistribution>(FiniteDistribution::uniform(2));
    Sample fixed = sample(data, 8, 123);
    auto law = exact_law_over_tapes(alg, fixed, 2);

    const int64_t trials = 1'000'000;
    int64_t ones = 0;
    for (int64_t i = 0; i < trials; ++i) {
        BitTape t = fresh_tape(55, static_cast<uint64_t>(i), 2);
        ones += alg.eval(fixed, t);
    }
    double mc = static_cast<double>(ones) / trials;
    double p = law.law.prob(1);
    CHECK(std::abs(mc - p) <= 3 * std::sqrt(0.25 / trials) + 1e-9);

    CHECK_THROWS_AS(exact_law_over_tapes(alg, fixed, 2, /*enum_cap=*/1), EnumerationTooLarge);
}

TEST_CASE("budget exhaustion inside an algorithm propagates through estimators") {
    MeteredAlgorithm alg;
    alg.sample_size = 1;
    alg.bit_budget = 1;
    alg.eval = [](const Sample&, BitTape& t) {
        t.read_bit();
        t.read_bit();  // past budget
        return 0;
    };
    auto data = FiniteDistribution::uniform(2);
    CHECK_THROWS_AS(estimate_replicability(alg, data, 16, true, 1), TapeExhausted);
}
