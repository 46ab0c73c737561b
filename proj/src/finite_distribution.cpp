#include "stability/finite_distribution.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace stability {

namespace {

uint64_t hash_doubles(const std::vector<double>& v) {
    uint64_t h = 0x2545F4914F6CDD1Dull;
    for (double d : v) {
        uint64_t bits;
        std::memcpy(&bits, &d, sizeof bits);
        h ^= bits;
        splitmix64(h);
    }
    return splitmix64(h);
}

}  // namespace

FiniteDistribution::FiniteDistribution(std::vector<double> probs) : p_(std::move(probs)) {
    if (p_.empty()) throw std::invalid_argument("FiniteDistribution: empty support");
    double sum = 0;
    for (double x : p_) {
        if (!(x >= 0)) throw std::invalid_argument("FiniteDistribution: negative probability");
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("FiniteDistribution: probabilities sum to " + std::to_string(sum));
    cdf_.resize(p_.size());
    double acc = 0;
    for (size_t i = 0; i < p_.size(); ++i) {
        acc += p_[i];
        cdf_[i] = acc;
    }
    cdf_.back() = 1.0;
    fingerprint_ = hash_doubles(p_);
}

FiniteDistribution FiniteDistribution::point_mass(int size, int at) {
    std::vector<double> p(static_cast<size_t>(size), 0.0);
    p.at(static_cast<size_t>(at)) = 1.0;
    return FiniteDistribution(std::move(p));
}

FiniteDistribution FiniteDistribution::uniform(int size) {
    std::vector<double> p(static_cast<size_t>(size), 1.0 / size);
    return FiniteDistribution(std::move(p));
}

std::vector<int> FiniteDistribution::support() const {
    std::vector<int> s;
    for (int i = 0; i < size(); ++i)
        if (p_[static_cast<size_t>(i)] > 0) s.push_back(i);
    return s;
}

int FiniteDistribution::quantile(double u) const {
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end()) --it;
    int i = static_cast<int>(it - cdf_.begin());
    // Skip zero-mass cells that share a cdf value with their predecessor.
    while (i + 1 < size() && p_[static_cast<size_t>(i)] == 0.0) ++i;
    while (i > 0 && p_[static_cast<size_t>(i)] == 0.0) --i;
    return i;
}

int FiniteDistribution::mode() const {
    int best = 0;
    for (int i = 1; i < size(); ++i)
        if (p_[static_cast<size_t>(i)] > p_[static_cast<size_t>(best)]) best = i;
    return best;
}

double FiniteDistribution::tv_distance(const FiniteDistribution& other) const {
    if (other.size() != size())
        throw std::invalid_argument("tv_distance: mismatched supports");
    double acc = 0;
    for (int i = 0; i < size(); ++i) {
        double d = prob(i) - other.prob(i);
        if (d > 0) acc += d;
    }
    return acc;
}

nlohmann::json FiniteDistribution::to_json() const {
    nlohmann::json entries = nlohmann::json::array();
    for (int i : support()) entries.push_back({i, prob(i)});
    return nlohmann::json{{"size", size()}, {"support", entries}};
}

FiniteDistribution FiniteDistribution::from_json(const nlohmann::json& j) {
    int size = j.at("size").get<int>();
    std::vector<double> p(static_cast<size_t>(size), 0.0);
    for (const auto& e : j.at("support")) {
        int id = e.at(0).get<int>();
        p.at(static_cast<size_t>(id)) = e.at(1).get<double>();
    }
    return FiniteDistribution(std::move(p));
}

}  // namespace stability
