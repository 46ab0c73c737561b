#include "stability/transforms_dp.hpp"

#include <algorithm>
#include <cmath>

namespace stability {

SelectionDataset SelectionDataset::from_counts(std::vector<int64_t> counts, double epsilon,
                                               double delta) {
    SelectionDataset ds;
    ds.counts = std::move(counts);
    for (int64_t c : ds.counts) {
        if (c < 0) throw std::invalid_argument("SelectionDataset: negative multiplicity");
        ds.total += c;
    }
    if (ds.total == 0) throw std::invalid_argument("SelectionDataset: empty dataset");
    ds.gap_bound = selection_gap(epsilon, delta);
    return ds;
}

int SelectionDataset::mode() const {
    int best = 0;
    for (int i = 1; i < static_cast<int>(counts.size()); ++i)
        if (counts[static_cast<size_t>(i)] > counts[static_cast<size_t>(best)]) best = i;
    return best;
}

int dp_select_budget(int64_t max_candidates, double delta) {
    return ceil_log2(static_cast<uint64_t>(std::max<int64_t>(1, max_candidates))) +
           static_cast<int>(std::ceil(std::log2(2.0 / delta)));
}

namespace {

CompressedSampler selection_sampler(const SelectionDataset& data, double epsilon, double delta,
                                    int output_domain_size) {
    const int mode = data.mode();
    const int64_t mode_count = data.counts[static_cast<size_t>(mode)];
    const int64_t floor_count = mode_count - data.gap_bound;

    std::vector<double> weights(static_cast<size_t>(output_domain_size), 0.0);
    double z = 0;
    int64_t candidates = 0;
    for (int y = 0; y < static_cast<int>(data.counts.size()); ++y) {
        int64_t c = data.counts[static_cast<size_t>(y)];
        if (c <= 0 || c < floor_count) continue;
        // weights shifted by the mode count; same normalized law
        double w = std::exp(epsilon * static_cast<double>(c - mode_count) / 2.0);
        weights[static_cast<size_t>(y)] = w;
        z += w;
        ++candidates;
    }
    for (double& w : weights) w /= z;
    // The float sum can miss 1 by an ulp; pin it on the mode.
    double sum = 0;
    for (double w : weights) sum += w;
    weights[static_cast<size_t>(mode)] += 1.0 - sum;

    int bits = ceil_log2(static_cast<uint64_t>(candidates)) +
               static_cast<int>(std::ceil(std::log2(2.0 / delta)));
    return compress_distribution(FiniteDistribution(std::move(weights)), bits);
}

}  // namespace

int dp_select(const SelectionDataset& data, double epsilon, double delta, BitTape& tape) {
    if (data.counts.empty()) throw std::invalid_argument("dp_select: empty dataset");
    auto cs = selection_sampler(data, epsilon, delta, static_cast<int>(data.counts.size()));
    return cs.draw(tape);
}

FiniteDistribution dp_select_law(const SelectionDataset& data, double epsilon, double delta,
                                 int output_domain_size) {
    auto cs = selection_sampler(data, epsilon, delta, output_domain_size);
    if (cs.induced.size() == output_domain_size) return cs.induced;
    std::vector<double> p(static_cast<size_t>(output_domain_size), 0.0);
    for (int y = 0; y < cs.induced.size(); ++y) p[static_cast<size_t>(y)] = cs.induced.prob(y);
    return FiniteDistribution(std::move(p));
}

DpPipelineParams DpPipelineParams::defaults(double epsilon, double delta, double eta, double beta) {
    DpPipelineParams p;
    p.epsilon = epsilon;
    p.delta = delta;
    p.eta = eta;
    p.beta = beta;
    int c_glob = std::max(0, static_cast<int>(std::ceil(std::log2(1.0 / eta) - 1e-9)));
    p.users = static_cast<int64_t>(
        std::ceil(p.c1 * std::ldexp(1.0, c_glob) * std::log(1.0 / delta) / epsilon));
    p.list_runs = static_cast<int64_t>(std::ceil(2.0 * std::log(1.0 / beta) / (eta * eta)));
    p.dummy = 0;
    return p;
}

StabToDpResult stab_to_dp(const MeteredAlgorithm& alg, const StatisticalTask& task,
                          std::span<const FiniteDistribution> family, DpPipelineParams params,
                          int64_t check_trials, uint64_t seed, Exec exec) {
    if (!alg.deterministic())
        throw std::invalid_argument("stab_to_dp: input algorithm must be deterministic");
    if (params.users < 1 || params.list_runs < 1)
        throw std::invalid_argument("stab_to_dp: users and list_runs must be >= 1");
    if (params.dummy < 0 || params.dummy >= task.output_domain_size)
        throw std::invalid_argument("stab_to_dp: dummy outside output domain");

    // Confidence precondition: beta-hat <= eta/2 on the family.
    for (const auto& d : family) {
        auto conf = estimate_confidence(alg, task, d, check_trials,
                                        derive_seed(seed, d.fingerprint() ^ 0xD9), exec);
        if (conf.failure_rate > params.eta / 2.0)
            throw PreconditionFailed("stab_to_dp: measured failure rate " +
                                         std::to_string(conf.failure_rate) + " exceeds eta/2",
                                     conf.failure_rate);
    }

    const int64_t t_dummy = selection_gap(params.epsilon, params.delta);
    const int64_t user_block = params.list_runs * alg.sample_size;
    const int out_size = task.output_domain_size;

    StabToDpResult res;
    res.params = params;
    res.user_block = user_block;
    res.dummy_copies = t_dummy;
    res.declared_bits = dp_select_budget(params.users + 1, params.delta);
    res.beta_prime_bound = static_cast<double>(params.users) *
                           std::pow(2.0 * params.beta / params.eta,
                                    static_cast<double>(t_dummy) / 4.0);

    MeteredAlgorithm mech;
    mech.sample_size = params.users * user_block;
    mech.bit_budget = res.declared_bits;
    auto inner = alg;
    mech.eval = [inner, params, t_dummy, user_block, out_size](const Sample& s, BitTape& tape) {
        std::vector<int64_t> counts(static_cast<size_t>(out_size), 0);
        for (int64_t u = 0; u < params.users; ++u) {
            Sample block = s.block(u, user_block);
            std::vector<int64_t> votes(static_cast<size_t>(out_size), 0);
            for (int64_t k = 0; k < params.list_runs; ++k) {
                BitTape empty;
                int y = inner.eval(block.block(k, inner.sample_size), empty);
                ++votes.at(static_cast<size_t>(y));
            }
            ++counts[static_cast<size_t>(phi_min_argmax(votes))];
        }
        counts[static_cast<size_t>(params.dummy)] += t_dummy;
        auto ds = SelectionDataset::from_counts(std::move(counts), params.epsilon, params.delta);
        return dp_select(ds, params.epsilon, params.delta, tape);
    };
    res.alg = std::move(mech);
    return res;
}

StabToDpChecks check_stab_to_dp(const StabToDpResult& mech, const StatisticalTask& task,
                                const FiniteDistribution& dist, int domain_size,
                                int64_t sampled_inputs, uint64_t seed, int enum_cap) {
    StabToDpChecks checks;

    // Bounded support over the full input universe, enumerated.
    int64_t total_len = mech.alg.sample_size;
    double universe = std::pow(domain_size, static_cast<double>(total_len));
    if (universe > 1e7)
        throw EnumerationTooLarge("check_stab_to_dp: input universe too large to enumerate");
    int64_t count = static_cast<int64_t>(universe);
    std::vector<int> elems(static_cast<size_t>(total_len));
    for (int64_t code = 0; code < count; ++code) {
        int64_t c = code;
        for (int64_t i = total_len - 1; i >= 0; --i) {
            elems[static_cast<size_t>(i)] = static_cast<int>(c % domain_size);
            c /= domain_size;
        }
        auto law = exact_law_over_tapes(mech.alg, Sample::explicit_elems(elems),
                                        task.output_domain_size, enum_cap);
        int64_t support = static_cast<int64_t>(law.law.support().size());
        checks.max_support = std::max(checks.max_support, support);
    }
    checks.inputs_enumerated = count;

    // Strong correctness over sampled inputs: tape-enumerated support must
    // stay inside the accepted set.
    auto dp = std::make_shared<const FiniteDistribution>(dist);
    int64_t violations = 0;
    for (int64_t i = 0; i < sampled_inputs; ++i) {
        Sample s = sample(dp, mech.alg.sample_size, derive_seed(seed, static_cast<uint64_t>(i)));
        auto law = exact_law_over_tapes(mech.alg, Sample::explicit_elems(s.materialize(), dist.fingerprint()),
                                        task.output_domain_size, enum_cap);
        for (int y : law.law.support()) {
            if (!is_correct(task, dist, y)) {
                ++violations;
                break;
            }
        }
    }
    checks.support_violation_rate =
        sampled_inputs > 0 ? static_cast<double>(violations) / static_cast<double>(sampled_inputs) : 0;
    checks.sampled = sampled_inputs;
    return checks;
}

DpToStabResult dp_to_stab(const MeteredAlgorithm& alg, const FiniteDistribution& dist,
                          int64_t users, double epsilon, double delta, double c2,
                          int search_budget, int64_t trials, double tolerance, uint64_t seed,
                          int output_domain_size, int enum_cap, Exec exec) {
    const double t = static_cast<double>(users);
    if (epsilon > c2 / std::sqrt(t * std::log(std::max(2.0, t))))
        throw PreconditionFailed("dp_to_stab: epsilon exceeds c2 / sqrt(T log T)", epsilon);
    if (delta > c2 / t) throw PreconditionFailed("dp_to_stab: delta exceeds c2 / T", delta);
    if (alg.bit_budget > enum_cap)
        throw EnumerationTooLarge("dp_to_stab: budget exceeds enumeration cap");

    const double target = 1.0 / (2.0 * std::exp(0.5)) - tolerance;
    auto dp = std::make_shared<const FiniteDistribution>(dist);

    // Marginal output weights, estimated once.
    std::vector<int64_t> marginal(static_cast<size_t>(output_domain_size), 0);
    {
        SplitMix rng(derive_seed(seed, 0x3A6));
        for (int64_t i = 0; i < trials; ++i) {
            BitTape tape = fresh_tape(derive_seed(seed, 0xBEE0 + static_cast<uint64_t>(i)), 1,
                                      alg.bit_budget);
            SplitMix r = rng.fork(i);
            ++marginal.at(static_cast<size_t>(run_on_fresh_sample(alg, dp, tape, r)));
        }
    }

    DpToStabResult res;
    for (int j = 0; j < search_budget; ++j) {
        Sample s = sample(dp, alg.sample_size, derive_seed(seed, 0x5EA0 + static_cast<uint64_t>(j)));
        auto law = exact_law_over_tapes(alg, s, output_domain_size, enum_cap);
        double mass = 0;
        for (int y : law.law.support())
            mass += static_cast<double>(marginal[static_cast<size_t>(y)]) / static_cast<double>(trials);
        res.best_observed_mass = std::max(res.best_observed_mass, mass);
        if (mass >= target) {
            res.found = true;
            res.support_mass = mass;
            res.witness_index = j;
            int heaviest = -1;
            for (int y : law.law.support())
                if (heaviest < 0 || marginal[static_cast<size_t>(y)] > marginal[static_cast<size_t>(heaviest)])
                    heaviest = y;
            res.extracted.output = heaviest;
            res.extracted.weight =
                static_cast<double>(marginal[static_cast<size_t>(heaviest)]) / static_cast<double>(trials);
            break;
        }
    }
    if (!res.found) return res;

    double eta = res.extracted.weight;
    std::vector<FiniteDistribution> family{dist};
    res.derandomized = derandomize_hh(alg, eta, eta / 4.0, family, trials,
                                      derive_seed(seed, 0xDE2), enum_cap, exec);
    return res;
}

PerfectGeneralizationReport check_perfect_generalization(const MeteredAlgorithm& alg,
                                                         const FiniteDistribution& dist,
                                                         double epsilon, double delta, double beta,
                                                         int64_t inputs, int64_t marginal_trials,
                                                         uint64_t seed, int output_domain_size,
                                                         int enum_cap, Exec exec) {
    if (alg.bit_budget > enum_cap)
        throw EnumerationTooLarge("check_perfect_generalization: budget exceeds cap");
    auto dp = std::make_shared<const FiniteDistribution>(dist);

    std::vector<int64_t> marg(static_cast<size_t>(output_domain_size), 0);
    {
        SplitMix rng(derive_seed(seed, 0x9C1));
        for (int64_t i = 0; i < marginal_trials; ++i) {
            BitTape tape = fresh_tape(derive_seed(seed, 0xCAFE + static_cast<uint64_t>(i)), 1,
                                      alg.bit_budget);
            SplitMix r = rng.fork(i);
            ++marg.at(static_cast<size_t>(run_on_fresh_sample(alg, dp, tape, r)));
        }
    }
    std::vector<double> mp(marg.size());
    for (size_t i = 0; i < marg.size(); ++i)
        mp[i] = static_cast<double>(marg[i]) / static_cast<double>(marginal_trials);
    FiniteDistribution sim{std::vector<double>(mp)};

    std::vector<uint8_t> fails(static_cast<size_t>(inputs), 0);
    std::exception_ptr err = nullptr;
#pragma omp parallel for schedule(static) if (exec == Exec::OpenMP)
    for (int64_t i = 0; i < inputs; ++i) {
        try {
            Sample s = sample(dp, alg.sample_size, derive_seed(seed, 0x51ull + static_cast<uint64_t>(i)));
            auto law = exact_law_over_tapes(alg, s, output_domain_size, enum_cap);
            double fwd = hockey_stick(law.law, sim, epsilon);
            double rev = hockey_stick(sim, law.law, epsilon);
            fails[static_cast<size_t>(i)] = (fwd > delta || rev > delta) ? 1 : 0;
        } catch (...) {
#pragma omp critical(stability_pg_err)
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);

    PerfectGeneralizationReport rep;
    rep.inputs = inputs;
    rep.epsilon = epsilon;
    rep.delta = delta;
    rep.beta = beta;
    int64_t bad = 0;
    for (uint8_t f : fails) bad += f;
    rep.fail_fraction = static_cast<double>(bad) / static_cast<double>(inputs);
    rep.pass = rep.fail_fraction <= beta;
    return rep;
}

}  // namespace stability
