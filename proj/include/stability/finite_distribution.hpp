#pragma once

#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "stability/common.hpp"

namespace stability {

// Explicit probability vector over an indexed finite support {0, ..., K-1}.
// The index order is the domain's total order phi; every tie-break in the
// library uses it. Probabilities must be nonnegative and sum to 1 within
// 1e-12 (construction from exact rationals goes through exact dyadic doubles
// in compress.hpp, which carries its own zero-tolerance arithmetic).
class FiniteDistribution {
public:
    // Trivial one-point distribution; keeps value members default-constructible.
    FiniteDistribution() : FiniteDistribution(std::vector<double>{1.0}) {}
    explicit FiniteDistribution(std::vector<double> probs);

    static FiniteDistribution point_mass(int size, int at);
    static FiniteDistribution uniform(int size);

    int size() const { return static_cast<int>(p_.size()); }
    double prob(int i) const { return p_[static_cast<size_t>(i)]; }
    std::span<const double> probs() const { return p_; }

    // Elements with nonzero mass, in phi order.
    std::vector<int> support() const;

    // Smallest i with cdf(i) > u; the inverse-CDF map used for all sampling.
    int quantile(double u) const;
    int sample(SplitMix& rng) const { return quantile(rng.unit()); }

    // phi-minimal element of maximal probability.
    int mode() const;

    double tv_distance(const FiniteDistribution& other) const;

    // Content fingerprint; keys oracle law maps and law caches.
    uint64_t fingerprint() const { return fingerprint_; }

    bool operator==(const FiniteDistribution& o) const { return p_ == o.p_; }

    // JSON wire format: array of [element_id, probability] pairs over the
    // nonzero support, plus the domain size.
    nlohmann::json to_json() const;
    static FiniteDistribution from_json(const nlohmann::json& j);

private:
    std::vector<double> p_;
    std::vector<double> cdf_;
    uint64_t fingerprint_ = 0;
};

}  // namespace stability
