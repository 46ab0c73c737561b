#include "stability/analysis.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/binomial.hpp>

namespace stability {

int phi_min_argmax(const std::vector<int64_t>& counts) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(counts.size()); ++i)
        if (counts[static_cast<size_t>(i)] > counts[static_cast<size_t>(best)]) best = i;
    return best;
}

double binomial_tail_geq(int64_t n, double p, int64_t k) {
    if (k <= 0) return 1.0;
    if (k > n) return 0.0;
    if (p <= 0) return 0.0;
    if (p >= 1) return 1.0;
    boost::math::binomial_distribution<double> bin(static_cast<double>(n), p);
    return boost::math::cdf(boost::math::complement(bin, static_cast<double>(k) - 1));
}

namespace {

// Pr[mode = y] summed over the winner's count v: all phi-smaller categories
// strictly below v, phi-larger at most v. The inner constrained multinomial
// is a DP over remaining categories and remaining draws.
std::optional<OutputLaw> mode_law_dp(const FiniteDistribution& base, int64_t m, int64_t work_cap) {
    std::vector<int> active;
    for (int y = 0; y < base.size(); ++y)
        if (base.prob(y) > 0) active.push_back(y);
    const int K = static_cast<int>(active.size());
    double work = static_cast<double>(K) * K * std::pow(static_cast<double>(m), 3.0);
    if (work > static_cast<double>(work_cap)) return std::nullopt;

    // log factorials
    std::vector<double> lf(static_cast<size_t>(m) + 1, 0.0);
    for (int64_t i = 1; i <= m; ++i)
        lf[static_cast<size_t>(i)] = lf[static_cast<size_t>(i - 1)] + std::log(static_cast<double>(i));

    std::vector<double> out(static_cast<size_t>(base.size()), 0.0);
    for (int wi = 0; wi < K; ++wi) {
        const int y = active[static_cast<size_t>(wi)];
        const double py = base.prob(y);
        for (int64_t v = (m + K - 1) / K; v <= m; ++v) {
            // caps for the other categories given winner count v
            // f[rem] = sum over assignments of remaining draws to categories
            // processed so far, of multinomial weight
            std::vector<double> f(static_cast<size_t>(m - v) + 1, 0.0);
            f[static_cast<size_t>(m - v)] = 1.0;  // rem counts down as we assign
            bool feasible = true;
            for (int zi = 0; zi < K && feasible; ++zi) {
                if (zi == wi) continue;
                const int z = active[static_cast<size_t>(zi)];
                const int64_t cap = zi < wi ? v - 1 : v;
                if (cap < 0) { feasible = false; break; }
                std::vector<double> g(f.size(), 0.0);
                const double pz = base.prob(z);
                const double lpz = std::log(pz);
                for (int64_t rem = 0; rem <= m - v; ++rem) {
                    if (f[static_cast<size_t>(rem)] == 0) continue;
                    const int64_t top = std::min(cap, rem);
                    for (int64_t c = 0; c <= top; ++c) {
                        // weight c draws for category z: p_z^c / c!
                        double w = std::exp(static_cast<double>(c) * lpz - lf[static_cast<size_t>(c)]);
                        g[static_cast<size_t>(rem - c)] += f[static_cast<size_t>(rem)] * w;
                    }
                }
                f = std::move(g);
            }
            if (!feasible) continue;
            double tail = f[0];  // all m - v draws assigned within caps
            if (tail <= 0) continue;
            // multinomial normalization: m! * p_y^v / v! * tail
            double logw = lf[static_cast<size_t>(m)] - lf[static_cast<size_t>(v)] +
                          static_cast<double>(v) * std::log(py);
            out[static_cast<size_t>(y)] += std::exp(logw) * tail;
        }
    }
    double sum = 0;
    for (double& x : out) sum += x;
    // Renormalize away accumulated rounding; the defect is the honest bound.
    double defect = std::abs(1.0 - sum);
    for (double& x : out) x /= sum;
    return OutputLaw{FiniteDistribution(std::move(out)), true, defect + 1e-12};
}

}  // namespace

std::optional<OutputLaw> mode_of_iid_law(const FiniteDistribution& base, int64_t m, int64_t work_cap) {
    if (m < 1) return std::nullopt;
    std::vector<int> active;
    for (int y = 0; y < base.size(); ++y)
        if (base.prob(y) > 0) active.push_back(y);
    if (active.size() == 1) {
        return OutputLaw{FiniteDistribution::point_mass(base.size(), active[0]), true, 0.0};
    }
    if (active.size() == 2) {
        // mode = phi-min active element iff its count c satisfies 2c >= m,
        // i.e. c >= ceil(m/2); the exact tie goes to it by phi.
        const int ya = active[0], yb = active[1];
        double pa = binomial_tail_geq(m, base.prob(ya), (m + 1) / 2);
        std::vector<double> p(static_cast<size_t>(base.size()), 0.0);
        pa = std::min(1.0, std::max(0.0, pa));
        p[static_cast<size_t>(ya)] = pa;
        p[static_cast<size_t>(yb)] = 1.0 - pa;
        return OutputLaw{FiniteDistribution(std::move(p)), true, 1e-12};
    }
    return mode_law_dp(base, m, work_cap);
}

std::optional<OutputLaw> derandomized_law(const std::vector<OutputLaw>& tape_laws, int64_t m) {
    if (tape_laws.empty()) return std::nullopt;
    const int size = tape_laws[0].law.size();
    std::vector<int> active;
    for (int y = 0; y < size; ++y) {
        double mass = 0;
        for (const auto& l : tape_laws) mass += l.law.prob(y);
        if (mass > 0) active.push_back(y);
    }
    if (active.size() == 1) {
        return OutputLaw{FiniteDistribution::point_mass(size, active[0]), true, 0.0};
    }
    if (active.size() != 2) return std::nullopt;

    const int ya = active[0];
    const int64_t R = static_cast<int64_t>(tape_laws.size());
    // Per-tape success counts are prefix counts of shared uniforms: tape r
    // votes ya iff at least ceil(m/2) of the m draws fall below q_r = law_r(ya)
    // (ties to ya, the phi-min active output). The vote events are nested in
    // q_r, so the plurality is ya iff the median-tape prefix crosses.
    std::vector<double> q;
    q.reserve(static_cast<size_t>(R));
    double err = 0;
    for (const auto& l : tape_laws) {
        q.push_back(l.law.prob(ya));
        err = std::max(err, l.error_bound);
    }
    std::sort(q.begin(), q.end());
    // plurality = ya iff #votes >= ceil(R/2); votes are the top order
    // statistics, so the deciding tape is index R - ceil(R/2) (0-based).
    const int64_t deciding = R - (R + 1) / 2;
    const double qd = q[static_cast<size_t>(deciding)];
    double pa = binomial_tail_geq(m, qd, (m + 1) / 2);
    pa = std::min(1.0, std::max(0.0, pa));
    std::vector<double> p(static_cast<size_t>(size), 0.0);
    p[static_cast<size_t>(ya)] = pa;
    p[static_cast<size_t>(active[1])] = 1.0 - pa;
    return OutputLaw{FiniteDistribution(std::move(p)), true, err + 1e-12};
}

ThresholdAnalysis threshold_analysis(const FiniteDistribution& law, double eta, double gamma,
                                     int64_t thresholds, int64_t estimation_runs, int bottom) {
    ThresholdAnalysis a;
    a.per_threshold.reserve(static_cast<size_t>(thresholds));
    double lo_acc = 0;
    for (int64_t i = 0; i < thresholds; ++i) {
        ThresholdPrediction tp;
        tp.threshold = eta - static_cast<double>(i + 1) * gamma;
        tp.limit_output = bottom;
        double dev = 0;
        for (int y = 0; y < law.size(); ++y) {
            if (y == bottom) continue;
            double p = law.prob(y);
            double d = p - tp.threshold;
            if (d >= 0 && tp.limit_output == bottom) tp.limit_output = y;
            dev += std::exp(-2.0 * static_cast<double>(estimation_runs) * d * d);
        }
        tp.deviation_bound = std::min(1.0, dev);
        a.per_threshold.push_back(tp);
        double ok = 1.0 - tp.deviation_bound;
        lo_acc += ok > 0 ? ok * ok : 0.0;
    }
    a.replicability_lo = lo_acc / static_cast<double>(thresholds);
    a.replicability_hi = 1.0;
    return a;
}

}  // namespace stability
