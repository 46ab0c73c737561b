#include "stability/pac.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <set>

#include "stability/compress.hpp"
#include "stability/verify.hpp"

namespace stability {

HypothesisClass HypothesisClass::from_masks(int domain_size, std::vector<uint64_t> masks) {
    if (domain_size < 1 || domain_size > 63)
        throw std::invalid_argument("HypothesisClass: domain size must be in [1, 63]");
    std::set<uint64_t> seen(masks.begin(), masks.end());
    if (seen.size() != masks.size())
        throw std::invalid_argument("HypothesisClass: hypotheses must be distinct");
    HypothesisClass cls;
    cls.domain_size = domain_size;
    cls.hypotheses = std::move(masks);
    cls.vc_dim = compute_vc_dimension(domain_size, cls.hypotheses);
    return cls;
}

HypothesisClass HypothesisClass::thresholds(int domain_size) {
    std::vector<uint64_t> masks;
    for (int k = 0; k <= domain_size; ++k) {
        uint64_t m = 0;
        for (int x = k; x < domain_size; ++x) m |= uint64_t{1} << x;
        masks.push_back(m);
    }
    return from_masks(domain_size, std::move(masks));
}

HypothesisClass HypothesisClass::intervals(int domain_size) {
    std::set<uint64_t> masks;
    for (int a = 0; a <= domain_size; ++a) {
        for (int b = a; b <= domain_size; ++b) {
            uint64_t m = 0;
            for (int x = a; x < b; ++x) m |= uint64_t{1} << x;
            masks.insert(m);
        }
    }
    return from_masks(domain_size, std::vector<uint64_t>(masks.begin(), masks.end()));
}

int compute_vc_dimension(int domain_size, const std::vector<uint64_t>& hypotheses) {
    if (domain_size > 16)
        throw std::invalid_argument("compute_vc_dimension: brute force capped at |X| = 16");
    int vc = 0;
    for (int d = 1; d <= domain_size; ++d) {
        bool shattered_some = false;
        std::vector<int> idx(static_cast<size_t>(d));
        for (int i = 0; i < d; ++i) idx[static_cast<size_t>(i)] = i;
        while (!shattered_some) {
            std::set<uint64_t> patterns;
            for (uint64_t h : hypotheses) {
                uint64_t pat = 0;
                for (int i = 0; i < d; ++i)
                    pat |= ((h >> idx[static_cast<size_t>(i)]) & 1) << i;
                patterns.insert(pat);
            }
            if (static_cast<int64_t>(patterns.size()) == (int64_t{1} << d)) shattered_some = true;
            int i = d - 1;
            while (i >= 0 && idx[static_cast<size_t>(i)] == domain_size - d + i) --i;
            if (i < 0) break;
            ++idx[static_cast<size_t>(i)];
            for (int j = i + 1; j < d; ++j)
                idx[static_cast<size_t>(j)] = idx[static_cast<size_t>(j - 1)] + 1;
        }
        if (!shattered_some) break;
        vc = d;
    }
    return vc;
}

int64_t sauer_bound(int64_t n, int vc) {
    long double acc = 0;
    for (int i = 0; i <= vc; ++i) {
        long double term = 1;
        for (int j = 0; j < i; ++j)
            term = term * static_cast<long double>(n - j) / static_cast<long double>(j + 1);
        acc += term;
        if (acc > 4e18L) return INT64_MAX;
    }
    return static_cast<int64_t>(acc);
}

LabeledDistribution LabeledDistribution::noisy(const HypothesisClass& cls, int truth_index,
                                               double noise) {
    std::vector<double> p(static_cast<size_t>(2 * cls.domain_size), 0.0);
    double px = 1.0 / cls.domain_size;
    for (int x = 0; x < cls.domain_size; ++x) {
        int truth = cls.label(truth_index, x);
        p[static_cast<size_t>(2 * x + truth)] = px * (1.0 - noise);
        p[static_cast<size_t>(2 * x + (1 - truth))] = px * noise;
    }
    return LabeledDistribution(FiniteDistribution(std::move(p)), cls.domain_size);
}

double true_error(const HypothesisClass& cls, int h, const LabeledDistribution& dist) {
    double err = 0;
    for (int x = 0; x < dist.domain_size; ++x) {
        int hx = cls.label(h, x);
        err += dist.joint.prob(2 * x + (1 - hx));
    }
    return err;
}

double optimal_error(const HypothesisClass& cls, const LabeledDistribution& dist) {
    double best = 1.0;
    for (int h = 0; h < cls.size(); ++h) best = std::min(best, true_error(cls, h, dist));
    return best;
}

double empirical_error(const HypothesisClass& cls, int h, const LabeledHistogram& s) {
    if (s.n == 0) return 0;
    int64_t bad = 0;
    for (int x = 0; x < cls.domain_size; ++x) {
        int hx = cls.label(h, x);
        bad += s.counts[static_cast<size_t>(2 * x + (1 - hx))];
    }
    return static_cast<double>(bad) / static_cast<double>(s.n);
}

std::vector<uint64_t> all_labelings(const HypothesisClass& cls,
                                    const std::vector<int64_t>& unlabeled_counts,
                                    int64_t sample_size) {
    std::vector<int> support;
    for (int x = 0; x < cls.domain_size; ++x)
        if (unlabeled_counts[static_cast<size_t>(x)] > 0) support.push_back(x);
    std::vector<uint64_t> distinct;
    distinct.reserve(static_cast<size_t>(cls.size()));
    for (int h = 0; h < cls.size(); ++h) {
        uint64_t pat = 0;
        for (size_t i = 0; i < support.size(); ++i)
            pat |= static_cast<uint64_t>(cls.label(h, support[i])) << i;
        distinct.push_back(pat);
    }
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    int64_t bound = sauer_bound(std::max<int64_t>(sample_size, 1), cls.vc_dim);
    if (static_cast<int64_t>(distinct.size()) > bound)
        throw std::logic_error("all_labelings: Sauer bound violated");
    return distinct;
}

RealizableListLearner default_realizable_list_learner(const HypothesisClass& cls, double alpha,
                                                      double beta) {
    if (!(alpha > 0) || !(beta > 0 && beta < 1))
        throw std::invalid_argument("default_realizable_list_learner: bad alpha/beta");
    RealizableListLearner L;
    L.sample_size = static_cast<int64_t>(
        std::ceil((std::log(static_cast<double>(cls.size())) + std::log(1.0 / beta)) / (alpha / 8.0)));
    L.nu = 1.0;
    L.list_bound = cls.size();
    auto cp = std::make_shared<const HypothesisClass>(cls);
    L.learn = [cp, alpha](const LabeledHistogram& s) {
        std::vector<int> list;
        for (int h = 0; h < cp->size(); ++h)
            if (empirical_error(*cp, h, s) <= alpha / 2.0 + 1e-12) list.push_back(h);
        return list;
    };
    return L;
}

StatisticalTask pac_task(std::shared_ptr<const HypothesisClass> cls, double alpha) {
    StatisticalTask t;
    t.id = "pac";
    t.data_domain_size = 2 * cls->domain_size;
    t.output_domain_size = cls->size() + 1;
    t.bottom = cls->size();
    t.accepted = [cls, alpha](const FiniteDistribution& joint, int y) {
        LabeledDistribution d(joint, cls->domain_size);
        return true_error(*cls, y, d) <= optimal_error(*cls, d) + alpha + 1e-12;
    };
    return t;
}

std::vector<int> prune_candidates(const HypothesisClass& cls, const std::vector<int64_t>& counts,
                                  int64_t prune_min, const LabeledHistogram& labeled, double alpha) {
    double best = 2.0;
    for (int h = 0; h < cls.size(); ++h) {
        if (counts[static_cast<size_t>(h)] <= 0) continue;
        best = std::min(best, empirical_error(cls, h, labeled));
    }
    std::vector<int> pruned;
    for (int h = 0; h < cls.size(); ++h) {
        if (counts[static_cast<size_t>(h)] < prune_min) continue;
        if (empirical_error(cls, h, labeled) <= best + 0.75 * alpha + 1e-12) pruned.push_back(h);
    }
    return pruned;
}

namespace {

struct ReduceCore {
    std::shared_ptr<const HypothesisClass> cls;
    RealizableListLearner learner;
    int64_t T = 0, n_u = 0, n_l = 0, prune_min = 0, pruned_cap = 0;
    double alpha = 0;
    std::shared_ptr<std::atomic<int64_t>> pruned_high_water;

    int run(const std::vector<LabeledHistogram>& unlabeled, const LabeledHistogram& sl,
            BitTape& tape) const {
        std::vector<int64_t> w(static_cast<size_t>(cls->size()), 0);
        std::vector<int64_t> ux(static_cast<size_t>(cls->domain_size), 0);
        LabeledHistogram relabeled;
        for (const auto& su : unlabeled) {
            for (int x = 0; x < cls->domain_size; ++x)
                ux[static_cast<size_t>(x)] =
                    su.counts[static_cast<size_t>(2 * x)] + su.counts[static_cast<size_t>(2 * x + 1)];
            auto labelings = all_labelings(*cls, ux, n_u);
            std::vector<int> support;
            for (int x = 0; x < cls->domain_size; ++x)
                if (ux[static_cast<size_t>(x)] > 0) support.push_back(x);
            for (uint64_t pat : labelings) {
                relabeled.counts.assign(static_cast<size_t>(2 * cls->domain_size), 0);
                relabeled.n = 0;
                for (size_t i = 0; i < support.size(); ++i) {
                    int x = support[i];
                    int lab = static_cast<int>((pat >> i) & 1);
                    relabeled.counts[static_cast<size_t>(2 * x + lab)] = ux[static_cast<size_t>(x)];
                    relabeled.n += ux[static_cast<size_t>(x)];
                }
                for (int h : learner.learn(relabeled)) ++w.at(static_cast<size_t>(h));
            }
        }

        std::vector<int> pruned = prune_candidates(*cls, w, prune_min, sl, alpha);
        if (static_cast<int64_t>(pruned.size()) > pruned_cap)
            throw std::logic_error("agnostic_reduce: pruned set exceeds its Sauer-based cap");
        int64_t seen = static_cast<int64_t>(pruned.size());
        int64_t prev = pruned_high_water->load();
        while (seen > prev && !pruned_high_water->compare_exchange_weak(prev, seen)) {
        }
        if (pruned.empty()) return cls->size();  // bottom
        if (pruned.size() == 1) return pruned[0];
        int bits = ceil_log2(pruned.size());
        std::vector<double> uni(pruned.size(), 1.0 / static_cast<double>(pruned.size()));
        auto cs = compress_distribution(FiniteDistribution(std::move(uni)), bits);
        return pruned[static_cast<size_t>(cs.draw(tape))];
    }
};

}  // namespace

AgnosticReduceResult agnostic_reduce(const HypothesisClass& cls, const RealizableListLearner& learner,
                                     double alpha, double beta) {
    if (!(alpha > 0 && alpha <= 1) || !(beta > 0 && beta < 1))
        throw std::invalid_argument("agnostic_reduce: bad alpha/beta");

    auto core = std::make_shared<ReduceCore>();
    core->cls = std::make_shared<const HypothesisClass>(cls);
    core->learner = learner;
    core->alpha = alpha;
    core->T = static_cast<int64_t>(std::ceil(8.0 / learner.nu * std::log(4.0 / beta)));
    core->n_u = learner.sample_size;
    core->prune_min = static_cast<int64_t>(std::ceil(0.5 * learner.nu * static_cast<double>(core->T)));
    core->pruned_cap = std::min<int64_t>(
        cls.size(), static_cast<int64_t>(std::ceil(
                        2.0 / learner.nu * static_cast<double>(sauer_bound(core->n_u, cls.vc_dim)))));
    core->pruned_high_water = std::make_shared<std::atomic<int64_t>>(0);
    // Pruning sample sized against the multiset cap so the declared sample
    // size stays fixed across evaluations.
    double c_cap = static_cast<double>(core->T) *
                   static_cast<double>(sauer_bound(core->n_u, cls.vc_dim)) *
                   static_cast<double>(std::max(1, learner.list_bound));
    core->n_l = static_cast<int64_t>(
        std::ceil(2.0 * (std::log(c_cap) + std::log(2.0 / beta)) / (alpha * alpha)));

    AgnosticReduceResult res;
    res.unlabeled_samples = core->T;
    res.unlabeled_size = core->n_u;
    res.labeled_size = core->n_l;
    res.prune_count_min = core->prune_min;
    res.pruned_cap = core->pruned_cap;
    res.nu = learner.nu;
    res.pruned_high_water = core->pruned_high_water;

    const int xs = cls.domain_size;
    MeteredAlgorithm alg;
    alg.sample_size = core->T * core->n_u + core->n_l;
    alg.bit_budget = ceil_log2(static_cast<uint64_t>(core->pruned_cap));
    alg.eval = [core, xs](const Sample& s, BitTape& tape) {
        std::vector<LabeledHistogram> unlabeled(static_cast<size_t>(core->T));
        for (int64_t i = 0; i < core->T; ++i) {
            auto& h = unlabeled[static_cast<size_t>(i)];
            h.counts.assign(static_cast<size_t>(2 * xs), 0);
            Sample block = s.sub(i * core->n_u, core->n_u);
            for (int64_t j = 0; j < core->n_u; ++j) ++h.counts.at(static_cast<size_t>(block.at(j)));
            h.n = core->n_u;
        }
        LabeledHistogram sl;
        sl.counts.assign(static_cast<size_t>(2 * xs), 0);
        Sample lab = s.sub(core->T * core->n_u, core->n_l);
        for (int64_t j = 0; j < core->n_l; ++j) ++sl.counts.at(static_cast<size_t>(lab.at(j)));
        sl.n = core->n_l;
        return core->run(unlabeled, sl, tape);
    };
    alg.sampler = [core, xs](const FiniteDistribution& joint, BitTape& tape, SplitMix& rng) {
        // Histograms drawn directly as multinomials: every downstream
        // computation depends on the sample only through its counts, so this
        // is equal in distribution to the literal per-element loop.
        auto draw_hist = [&](int64_t n, LabeledHistogram& h) {
            h.counts.assign(static_cast<size_t>(2 * xs), 0);
            h.n = n;
            int64_t remaining = n;
            double mass = 1.0;
            for (int id = 0; id < 2 * xs && remaining > 0; ++id) {
                double p = joint.prob(id);
                if (p <= 0) continue;
                double cond = mass > 0 ? std::min(1.0, p / mass) : 1.0;
                int64_t c;
                if (cond >= 1.0) {
                    c = remaining;
                } else {
                    std::binomial_distribution<int64_t> bin(remaining, cond);
                    c = bin(rng);
                }
                h.counts[static_cast<size_t>(id)] = c;
                remaining -= c;
                mass -= p;
            }
        };
        std::vector<LabeledHistogram> unlabeled(static_cast<size_t>(core->T));
        for (auto& h : unlabeled) draw_hist(core->n_u, h);
        LabeledHistogram sl;
        draw_hist(core->n_l, sl);
        return core->run(unlabeled, sl, tape);
    };
    res.alg = std::move(alg);
    return res;
}

AgnosticLearnerResult agnostic_replicable_learner(std::shared_ptr<const HypothesisClass> cls,
                                                  double alpha, double beta, double rho,
                                                  const LabeledDistribution& dist, uint64_t seed,
                                                  const AgnosticLearnerTuning& tuning, Exec exec) {
    AgnosticLearnerResult res;
    // Learner run at accuracy alpha/8 with confidence nu/8, so its list holds
    // an alpha/8-optimal hypothesis for the realizable labeling whp.
    auto learner = default_realizable_list_learner(*cls, alpha / 8.0, 1.0 / 8.0);
    res.reduce = agnostic_reduce(*cls, learner, alpha, beta);

    const int out_size = cls->size() + 1;
    const double probe_eta = 0.08;
    int64_t hh_trials = std::max<int64_t>(
        tuning.hh_trials,
        static_cast<int64_t>(std::ceil(8.0 * std::log(2.0 / 0.001) / (probe_eta * probe_eta))));
    auto hitters = find_heavy_hitters(res.reduce.alg, dist.joint, probe_eta, hh_trials,
                                      derive_seed(seed, 0x44AA), out_size, exec);
    if (hitters.empty())
        throw PreconditionFailed("agnostic_replicable_learner: no heavy hitter measured", 0.0);
    res.hh_weight = hitters[0].weight;
    res.max_pruned_seen = res.reduce.pruned_high_water->load();

    std::vector<FiniteDistribution> family{dist.joint};
    StatisticalTask task = pac_task(cls, alpha);

    double eta = std::clamp(res.hh_weight * 0.9, 1e-4, 1.0 - 1e-9);
    res.derandomized = derandomize_hh(res.reduce.alg, eta, eta * tuning.gamma_prime_scale, family,
                                      tuning.measure_trials, derive_seed(seed, 0xDA1),
                                      kDefaultEnumCap, exec);

    double eta_det = 1.0;
    for (const auto& c : res.derandomized.collision) eta_det = std::min(eta_det, c.value);
    eta_det = std::clamp(eta_det * 0.9, eta / 2.0, 1.0 - 1e-9);

    auto params = ThresholdingParams::defaults(eta_det, rho, beta, 0.02);
    params.estimation_runs = tuning.estimation_runs;
    params.validate();
    res.thresholded = glob_to_rep(res.derandomized.alg, task, family, params, tuning.measure_trials,
                                  derive_seed(seed, 0x617), exec);
    res.alg = res.thresholded.alg;
    res.bits_used = res.thresholded.alg.bit_budget;
    res.bits_budget_formula =
        ceil_log2(static_cast<uint64_t>(std::max<int64_t>(
            1, static_cast<int64_t>(std::ceil(2.0 * static_cast<double>(std::max<int64_t>(
                                                        res.max_pruned_seen, 1)) /
                                              res.reduce.nu))))) +
        static_cast<int>(std::ceil(std::log2(1.0 / rho))) + 1;
    return res;
}

}  // namespace stability
