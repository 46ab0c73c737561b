#include "stability/transforms_rep.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace stability {

namespace {

int64_t list_run_count(double eta, double gamma_prime) {
    return static_cast<int64_t>(std::ceil(2.0 * std::log(1.0 / gamma_prime) / (eta * eta)));
}

// Empirical output counts of `alg` over n fresh runs on D, drawing the
// sample-side randomness from rng. Uses the exact marginal law when the
// algorithm declares one (the counts are then one multinomial draw, equal in
// distribution to n literal runs), otherwise runs literally.
void empirical_counts(const MeteredAlgorithm& alg,
                      const std::shared_ptr<const FiniteDistribution>& dist,
                      int64_t n, SplitMix& rng, std::vector<int64_t>& counts) {
    if (alg.tape_laws && alg.deterministic()) {
        auto laws = alg.tape_laws(*dist);
        if (laws.size() == 1 && laws[0].exact) {
            const FiniteDistribution& law = laws[0].law;
            int64_t remaining = n;
            double mass = 1.0;
            for (int y = 0; y < law.size() && remaining > 0; ++y) {
                double p = law.prob(y);
                if (p <= 0) continue;
                double cond = mass > 0 ? std::min(1.0, p / mass) : 1.0;
                int64_t c;
                if (cond >= 1.0) {
                    c = remaining;
                } else {
                    std::binomial_distribution<int64_t> bin(remaining, cond);
                    c = bin(rng);
                }
                counts[static_cast<size_t>(y)] += c;
                remaining -= c;
                mass -= p;
            }
            if (remaining > 0) counts[static_cast<size_t>(law.size() - 1)] += remaining;
            return;
        }
    }
    for (int64_t i = 0; i < n; ++i) {
        BitTape t = fresh_tape(rng(), 0, alg.bit_budget);
        SplitMix r = rng.fork(i);
        int y = run_on_fresh_sample(alg, dist, t, r);
        ++counts.at(static_cast<size_t>(y));
    }
}

std::vector<DistMetric> measure_collisions(const MeteredAlgorithm& alg,
                                           std::span<const FiniteDistribution> family,
                                           int64_t trials, bool shared, uint64_t seed, Exec exec) {
    std::vector<DistMetric> out;
    for (const auto& d : family) {
        auto rep = estimate_replicability(alg, d, trials, shared, derive_seed(seed, d.fingerprint()), exec);
        out.push_back(DistMetric{d.fingerprint(), rep.estimate, rep.ci_halfwidth});
    }
    return out;
}

}  // namespace

DerandomizeResult derandomize_hh(const MeteredAlgorithm& alg, double eta, double gamma_prime,
                                 std::span<const FiniteDistribution> family,
                                 int64_t verify_trials, uint64_t seed, int enum_cap, Exec exec) {
    if (!(eta > 0 && eta <= 1)) throw std::invalid_argument("derandomize_hh: eta must be in (0,1]");
    if (!(gamma_prime > 0 && gamma_prime < eta))
        throw std::invalid_argument("derandomize_hh: need 0 < gamma' < eta");
    if (alg.bit_budget > enum_cap)
        throw EnumerationTooLarge("derandomize_hh: input budget exceeds enumeration cap");

    const int64_t m = list_run_count(eta, gamma_prime);
    const int budget = alg.bit_budget;
    const int64_t tapes = int64_t{1} << budget;

    MeteredAlgorithm det;
    det.sample_size = m * alg.sample_size;
    det.bit_budget = 0;
    det.eval = [alg, m, budget, tapes](const Sample& s, BitTape&) {
        int size_hint = 0;
        // blocks are shared across tapes: evaluate block-major
        std::vector<std::vector<int64_t>> per_tape_counts(static_cast<size_t>(tapes));
        for (int64_t i = 0; i < m; ++i) {
            Sample block = s.block(i, alg.sample_size);
            for (int64_t r = 0; r < tapes; ++r) {
                BitTape t = BitTape::from_integer(static_cast<uint64_t>(r), budget);
                int y = alg.eval(block, t);
                auto& c = per_tape_counts[static_cast<size_t>(r)];
                if (y >= static_cast<int>(c.size())) c.resize(static_cast<size_t>(y) + 1, 0);
                ++c[static_cast<size_t>(y)];
                size_hint = std::max(size_hint, y + 1);
            }
        }
        std::vector<int64_t> plur(static_cast<size_t>(size_hint), 0);
        for (int64_t r = 0; r < tapes; ++r) {
            int mode = phi_min_argmax(per_tape_counts[static_cast<size_t>(r)]);
            ++plur[static_cast<size_t>(mode)];
        }
        return phi_min_argmax(plur);
    };
    if (alg.sampler) {
        det.sampler = [alg, m, budget, tapes](const FiniteDistribution& d, BitTape&, SplitMix& rng) {
            std::vector<std::vector<int64_t>> per_tape_counts(static_cast<size_t>(tapes));
            int size_hint = 0;
            for (int64_t i = 0; i < m; ++i) {
                SplitMix block_rng = rng.fork(i);  // shared across tapes
                for (int64_t r = 0; r < tapes; ++r) {
                    BitTape t = BitTape::from_integer(static_cast<uint64_t>(r), budget);
                    SplitMix rr = block_rng;
                    int y = alg.sampler(d, t, rr);
                    auto& c = per_tape_counts[static_cast<size_t>(r)];
                    if (y >= static_cast<int>(c.size())) c.resize(static_cast<size_t>(y) + 1, 0);
                    ++c[static_cast<size_t>(y)];
                    size_hint = std::max(size_hint, y + 1);
                }
            }
            std::vector<int64_t> plur(static_cast<size_t>(size_hint), 0);
            for (int64_t r = 0; r < tapes; ++r) {
                int mode = phi_min_argmax(per_tape_counts[static_cast<size_t>(r)]);
                ++plur[static_cast<size_t>(mode)];
            }
            return phi_min_argmax(plur);
        };
    }
    if (alg.tape_laws) {
        auto inner = alg.tape_laws;
        det.tape_laws = cache_tape_laws([inner, m](const FiniteDistribution& d) -> std::vector<OutputLaw> {
            auto laws = inner(d);
            auto composed = derandomized_law(laws, m);
            if (!composed) return {};
            return {*composed};
        });
    }

    DerandomizeResult res;
    res.eta = eta;
    res.gamma_prime = gamma_prime;
    res.list_runs = m;
    res.alg = std::move(det);
    res.collision = measure_collisions(res.alg, family, verify_trials, false, derive_seed(seed, 0xDE7), exec);
    res.verified = true;
    for (const auto& c : res.collision)
        if (c.value < eta - gamma_prime) res.verified = false;
    return res;
}

RepToGlobResult rep_to_glob(const MeteredAlgorithm& alg, double gamma, double tau,
                            std::span<const FiniteDistribution> family,
                            int64_t trials, uint64_t seed, Exec exec) {
    if (!(gamma > 0 && gamma < 0.5)) throw std::invalid_argument("rep_to_glob: gamma must be in (0, 1/2)");
    if (!(tau > 0 && tau < 1)) throw std::invalid_argument("rep_to_glob: tau must be in (0,1)");

    RepToGlobResult res;
    res.shared_replicability = measure_collisions(alg, family, trials, true, derive_seed(seed, 0x5AED), exec);
    for (const auto& r : res.shared_replicability)
        if (r.value <= 0.5 + gamma)
            throw PreconditionFailed("rep_to_glob: measured shared-tape replicability " +
                                         std::to_string(r.value) + " is not above 1/2 + gamma",
                                     r.value);

    const int64_t T = static_cast<int64_t>(std::ceil(std::log(2.0 / tau) / (2.0 * gamma * gamma)));
    const int budget = alg.bit_budget;

    MeteredAlgorithm maj;
    maj.sample_size = T * alg.sample_size;
    maj.bit_budget = budget;
    maj.eval = [alg, T, budget](const Sample& s, BitTape& tape) {
        uint64_t r = tape.read_bits(budget);
        std::vector<int64_t> counts;
        for (int64_t i = 0; i < T; ++i) {
            BitTape t = BitTape::from_integer(r, budget);
            int y = alg.eval(s.block(i, alg.sample_size), t);
            if (y >= static_cast<int>(counts.size())) counts.resize(static_cast<size_t>(y) + 1, 0);
            ++counts[static_cast<size_t>(y)];
        }
        return phi_min_argmax(counts);
    };
    if (alg.sampler) {
        maj.sampler = [alg, T, budget](const FiniteDistribution& d, BitTape& tape, SplitMix& rng) {
            uint64_t r = tape.read_bits(budget);
            std::vector<int64_t> counts;
            for (int64_t i = 0; i < T; ++i) {
                BitTape t = BitTape::from_integer(r, budget);
                SplitMix rr = rng.fork(i);
                int y = alg.sampler(d, t, rr);
                if (y >= static_cast<int>(counts.size())) counts.resize(static_cast<size_t>(y) + 1, 0);
                ++counts[static_cast<size_t>(y)];
            }
            return phi_min_argmax(counts);
        };
    }
    if (alg.tape_laws) {
        auto inner = alg.tape_laws;
        maj.tape_laws = cache_tape_laws([inner, T](const FiniteDistribution& d) -> std::vector<OutputLaw> {
            auto laws = inner(d);
            std::vector<OutputLaw> out;
            out.reserve(laws.size());
            for (const auto& l : laws) {
                auto mode = mode_of_iid_law(l.law, T);
                if (!mode) return {};
                mode->exact = mode->exact && l.exact;
                mode->error_bound += l.error_bound;
                out.push_back(std::move(*mode));
            }
            return out;
        });
    }

    res.alg = std::move(maj);
    res.majority_runs = T;
    res.tau = tau;
    res.collision_bound = std::ldexp(1.0, -budget) * (1.0 - tau);
    res.independent_collision =
        measure_collisions(res.alg, family, trials, false, derive_seed(seed, 0x1D9), exec);
    res.verified = true;
    for (const auto& c : res.independent_collision)
        if (c.value + c.ci < res.collision_bound) res.verified = false;
    return res;
}

ThresholdingParams ThresholdingParams::defaults(double eta, double rho, double beta, double tau_prime) {
    if (!(eta > 0 && eta <= 1)) throw std::invalid_argument("ThresholdingParams: eta must be in (0,1]");
    if (!(rho > 0 && rho < 1)) throw std::invalid_argument("ThresholdingParams: rho must be in (0,1)");
    ThresholdingParams p;
    p.eta = eta;
    p.rho = rho;
    p.tau_prime = tau_prime;
    int c_glob = std::max(0, static_cast<int>(std::ceil(std::log2(1.0 / eta) - 1e-9)));
    double planted = std::ldexp(1.0, c_glob) - 1.0;
    p.threshold_count = std::max<int64_t>(1, static_cast<int64_t>(std::ceil(planted / rho - 1e-9)));
    p.bits = ceil_log2(static_cast<uint64_t>(p.threshold_count));
    p.threshold_rounded = int64_t{1} << p.bits;
    double t2 = static_cast<double>(p.threshold_rounded);
    p.gamma = std::min(eta * rho / (4.0 * static_cast<double>(p.threshold_count)), eta / (2.0 * t2));
    p.tau = p.gamma / 10.0;
    double runs = std::ceil(9.0 / (2.0 * p.gamma * p.gamma) * std::log(2.0 / (beta * tau_prime)));
    p.estimation_runs = 4 * static_cast<int64_t>(runs);
    p.validate();
    return p;
}

void ThresholdingParams::validate() const {
    if (!(tau < gamma && gamma < eta))
        throw std::invalid_argument("ThresholdingParams: need tau < gamma < eta");
    if (threshold_rounded < threshold_count || (int64_t{1} << bits) != threshold_rounded)
        throw std::invalid_argument("ThresholdingParams: inconsistent rounding");
    if (threshold(threshold_rounded - 1) <= 0)
        throw std::invalid_argument("ThresholdingParams: thresholds must stay positive");
    if (estimation_runs < 1) throw std::invalid_argument("ThresholdingParams: estimation_runs < 1");
}

GlobToRepResult glob_to_rep(const MeteredAlgorithm& alg, const StatisticalTask& task,
                            std::span<const FiniteDistribution> family,
                            const ThresholdingParams& params,
                            int64_t measure_trials, uint64_t seed, Exec exec) {
    if (!alg.deterministic())
        throw std::invalid_argument("glob_to_rep: input algorithm must be deterministic (budget 0)");

    GlobToRepResult res;
    res.params = params;
    res.params.validate();
    const ThresholdingParams& p = res.params;

    // Confidence precondition: beta-hat <= eta/8 on every family distribution.
    for (const auto& d : family) {
        auto conf = estimate_confidence(alg, task, d, std::max<int64_t>(measure_trials, 1000),
                                        derive_seed(seed, d.fingerprint() ^ 0xC0F), exec);
        res.confidence_pre.push_back(DistMetric{d.fingerprint(), conf.failure_rate, conf.ci_halfwidth});
        if (conf.failure_rate > p.eta / 8.0)
            throw PreconditionFailed("glob_to_rep: measured failure rate " +
                                         std::to_string(conf.failure_rate) + " exceeds eta/8",
                                     conf.failure_rate);
    }

    const int out_size = task.output_domain_size;
    const int bottom = task.bottom;
    MeteredAlgorithm rep;
    rep.sample_size = p.estimation_runs * alg.sample_size;
    rep.bit_budget = p.bits;
    auto select = [p, out_size, bottom](const std::vector<int64_t>& counts, uint64_t i) {
        const double thr = p.threshold(static_cast<int64_t>(i));
        const double n = static_cast<double>(p.estimation_runs);
        for (int y = 0; y < out_size; ++y) {
            if (y == bottom) continue;
            if (static_cast<double>(counts[static_cast<size_t>(y)]) / n >= thr) return y;
        }
        return bottom;
    };
    rep.eval = [alg, p, out_size, select](const Sample& s, BitTape& tape) {
        uint64_t i = tape.read_bits(p.bits);
        std::vector<int64_t> counts(static_cast<size_t>(out_size), 0);
        for (int64_t k = 0; k < p.estimation_runs; ++k) {
            BitTape empty;
            int y = alg.eval(s.block(k, alg.sample_size), empty);
            ++counts.at(static_cast<size_t>(y));
        }
        return select(counts, i);
    };
    {
        // Fast path: the empirical frequencies are one multinomial draw from
        // the input's exact law when it declares one, literal runs otherwise.
        MeteredAlgorithm inner = alg;
        rep.sampler = [inner, p, out_size, select](const FiniteDistribution& d, BitTape& tape,
                                                   SplitMix& rng) {
            uint64_t i = tape.read_bits(p.bits);
            std::vector<int64_t> counts(static_cast<size_t>(out_size), 0);
            auto dp = std::make_shared<const FiniteDistribution>(d);
            empirical_counts(inner, dp, p.estimation_runs, rng, counts);
            return select(counts, i);
        };
    }

    res.alg = std::move(rep);
    res.replicability_bound =
        (static_cast<double>(p.threshold_rounded) - (1.0 / p.eta - 1.0)) /
            static_cast<double>(p.threshold_rounded) -
        p.tau_prime;
    res.shared_replicability =
        measure_collisions(res.alg, family, measure_trials, true, derive_seed(seed, 0x61B), exec);
    return res;
}

AmplifyResult amplify_replicability(const MeteredAlgorithm& alg, const StatisticalTask& task,
                                    std::span<const FiniteDistribution> family,
                                    double nu, double rho, int64_t trials, uint64_t seed, Exec exec) {
    if (!(nu > 0 && nu < 1)) throw std::invalid_argument("amplify_replicability: nu must be in (0,1)");
    if (!(rho > 0 && rho < 1)) throw std::invalid_argument("amplify_replicability: rho must be in (0,1)");

    auto pre = measure_collisions(alg, family, trials, true, derive_seed(seed, 0xA3), exec);
    for (const auto& r : pre)
        if (r.value + r.ci < 1.0 - nu)
            throw PreconditionFailed("amplify_replicability: measured replicability " +
                                         std::to_string(r.value) + " below 1 - nu",
                                     r.value);

    // List of t tapes; a uniform member is a nu/(2t)-heavy hitter.
    int64_t t = static_cast<int64_t>(std::ceil(2.0 * std::log(2.0 / rho) / nu));
    int list_bits = ceil_log2(static_cast<uint64_t>(t));
    int64_t t2 = int64_t{1} << list_bits;
    std::vector<BitTape> list;
    list.reserve(static_cast<size_t>(t2));
    for (int64_t j = 0; j < t2; ++j)
        list.push_back(fresh_tape(seed, 0x1157000ull + static_cast<uint64_t>(j), alg.bit_budget));

    MeteredAlgorithm picker;
    picker.sample_size = alg.sample_size;
    picker.bit_budget = list_bits;
    auto list_ptr = std::make_shared<std::vector<BitTape>>(std::move(list));
    picker.eval = [alg, list_ptr, list_bits](const Sample& s, BitTape& tape) {
        uint64_t j = tape.read_bits(list_bits);
        BitTape r = (*list_ptr)[static_cast<size_t>(j)];
        return alg.eval(s, r);
    };
    if (alg.sampler) {
        picker.sampler = [alg, list_ptr, list_bits](const FiniteDistribution& d, BitTape& tape,
                                                    SplitMix& rng) {
            uint64_t j = tape.read_bits(list_bits);
            BitTape r = (*list_ptr)[static_cast<size_t>(j)];
            return alg.sampler(d, r, rng);
        };
    }
    if (alg.tape_laws) {
        auto inner = alg.tape_laws;
        picker.tape_laws = cache_tape_laws([inner, list_ptr](const FiniteDistribution& d) {
            auto laws = inner(d);
            std::vector<OutputLaw> out;
            out.reserve(list_ptr->size());
            for (const auto& tape : *list_ptr)
                out.push_back(laws.at(static_cast<size_t>(tape.as_integer())));
            return out;
        });
    }

    AmplifyResult res;
    res.tapes_drawn = t2;
    res.list_hh_weight = nu / (2.0 * static_cast<double>(t2));

    double gamma_prime = res.list_hh_weight / 2.0;
    res.derandomized = derandomize_hh(picker, res.list_hh_weight, gamma_prime, family,
                                      std::max<int64_t>(trials / 4, 512), derive_seed(seed, 0xDD1),
                                      kDefaultEnumCap, exec);

    // Measured stability of the derandomized stage sets the threshold ladder.
    double eta_det = 1.0;
    for (const auto& c : res.derandomized.collision) eta_det = std::min(eta_det, c.value);
    eta_det = std::clamp(eta_det - gamma_prime, res.list_hh_weight / 2.0, 1.0 - 1e-9);

    auto tp = ThresholdingParams::defaults(eta_det, rho / 2.0, 0.05, rho / 4.0);
    res.thresholded = glob_to_rep(res.derandomized.alg, task, family, tp, trials,
                                  derive_seed(seed, 0x617), exec);
    res.alg = res.thresholded.alg;
    res.replicability = res.thresholded.shared_replicability;
    return res;
}

}  // namespace stability
