#include "stability/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "stability/compress.hpp"
#include "stability/transforms_dp.hpp"
#include "stability/transforms_rep.hpp"
#include "stability/verify.hpp"

namespace stability {

namespace {

const std::vector<std::string> kKnownKeys = {"experiment", "master_seed", "trials", "task",
                                             "transforms", "verify",      "audit",  "pac",
                                             "caps"};

FiniteDistribution dist_from_spec(const nlohmann::json& j) {
    if (j.contains("probs")) {
        int size = j.at("size").get<int>();
        std::vector<double> p(static_cast<size_t>(size), 0.0);
        for (const auto& e : j.at("probs"))
            p.at(e.at(0).get<size_t>()) = e.at(1).get<double>();
        return FiniteDistribution(std::move(p));
    }
    if (j.contains("uniform")) return FiniteDistribution::uniform(j.at("uniform").get<int>());
    if (j.contains("point")) {
        return FiniteDistribution::point_mass(j.at("size").get<int>(), j.at("point").get<int>());
    }
    throw ConfigError("task.data: expected probs, uniform, or point");
}

std::vector<double> law_vector(const nlohmann::json& j, int outputs_with_bottom) {
    std::vector<double> p(static_cast<size_t>(outputs_with_bottom), 0.0);
    for (const auto& e : j) p.at(e.at(0).get<size_t>()) = e.at(1).get<double>();
    return p;
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(kKnownKeys.begin(), kKnownKeys.end(), it.key()) == kKnownKeys.end())
            throw ConfigError("config: unknown key '" + it.key() + "'");
    }
    ExperimentConfig cfg;
    if (!j.contains("experiment")) throw ConfigError("config.experiment: required");
    cfg.experiment = j.at("experiment").get<std::string>();
    if (!j.contains("master_seed")) throw ConfigError("config.master_seed: required");
    if (!j.at("master_seed").is_number_integer()) throw ConfigError("config.master_seed: integer");
    cfg.master_seed = j.at("master_seed").get<uint64_t>();
    if (j.contains("trials")) cfg.trials = j.at("trials").get<int64_t>();
    if (cfg.trials < 1) throw ConfigError("config.trials: must be >= 1");
    if (j.contains("task")) cfg.task = j.at("task");
    if (j.contains("transforms")) {
        cfg.transforms = j.at("transforms");
        if (!cfg.transforms.is_array()) throw ConfigError("config.transforms: expected array");
    } else {
        cfg.transforms = nlohmann::json::array();
    }
    if (j.contains("verify")) {
        for (const auto& v : j.at("verify")) cfg.verify.push_back(v.get<std::string>());
    }
    if (j.contains("audit")) cfg.audit = j.at("audit");
    if (j.contains("pac")) cfg.pac = j.at("pac");
    if (j.contains("caps") && j.at("caps").contains("max_enum_bits"))
        cfg.max_enum_bits = j.at("caps").at("max_enum_bits").get<int>();
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    in >> j;
    return parse(j);
}

BuiltExperiment build_task_algorithm(const nlohmann::json& spec) {
    if (!spec.is_object() || !spec.contains("type")) throw ConfigError("task.type: required");
    const std::string type = spec.at("type").get<std::string>();
    if (type == "oracle") {
        FiniteDistribution data = dist_from_spec(spec.at("data"));
        int outputs = spec.at("outputs").get<int>();
        int64_t n = spec.value("sample_size", int64_t{16});
        std::vector<int> rejected;
        if (spec.contains("rejected"))
            for (const auto& r : spec.at("rejected")) rejected.push_back(r.get<int>());
        StatisticalTask task = oracle_task(data.size(), outputs, rejected);
        MeteredAlgorithm alg;
        if (spec.contains("tape_laws")) {
            int bits = spec.at("bits").get<int>();
            std::vector<FiniteDistribution> laws;
            for (const auto& l : spec.at("tape_laws"))
                laws.push_back(FiniteDistribution(law_vector(l, task.output_domain_size)));
            alg = make_tape_oracle_algorithm({{data, laws}}, n, bits, task.output_domain_size);
        } else {
            FiniteDistribution law{law_vector(spec.at("law"), task.output_domain_size)};
            alg = make_oracle_algorithm({{data, law}}, n, task.output_domain_size);
        }
        return BuiltExperiment{task, data, std::move(alg), {data}};
    }
    if (type == "sample_mode") {
        FiniteDistribution data = dist_from_spec(spec.at("data"));
        int64_t n = spec.value("sample_size", int64_t{3});
        StatisticalTask task = oracle_task(data.size(), data.size(), {});
        return BuiltExperiment{task, data, make_sample_mode_algorithm(n), {data}};
    }
    throw ConfigError("task.type: unknown type '" + type + "'");
}

int64_t measure_bits_used(const MeteredAlgorithm& alg, const FiniteDistribution& dist,
                          int64_t trials, uint64_t seed) {
    auto dp = std::make_shared<const FiniteDistribution>(dist);
    int64_t max_read = 0;
    for (int64_t t = 0; t < trials; ++t) {
        uint64_t ts = derive_seed(seed, static_cast<uint64_t>(t));
        BitTape tape = fresh_tape(ts, 1, alg.bit_budget);
        SplitMix rng(derive_seed(ts, 3));
        run_on_fresh_sample(alg, dp, tape, rng);
        max_read = std::max<int64_t>(max_read, tape.cursor());
    }
    return max_read;
}

MeteredAlgorithm apply_transforms(const BuiltExperiment& built, const nlohmann::json& transforms,
                                  uint64_t seed, int64_t trials, std::vector<ReportRow>& rows,
                                  const std::string& experiment, nlohmann::json& summary) {
    MeteredAlgorithm alg = built.alg;
    int stage = 0;
    for (const auto& t : transforms) {
        const std::string kind = t.at("kind").get<std::string>();
        uint64_t stage_seed = derive_seed(seed, 0x7A00 + static_cast<uint64_t>(stage));
        if (kind == "derandomize") {
            double eta = t.at("eta").get<double>();
            double gp = t.value("gamma_prime", eta / 4.0);
            auto res = derandomize_hh(alg, eta, gp, built.family, trials, stage_seed);
            for (const auto& c : res.collision)
                rows.push_back(ReportRow{experiment, "derandomized_collision", c.value, c.ci, 0,
                                         res.alg.sample_size, res.verified ? "ok" : "failed"});
            summary["derandomize"] = {{"list_runs", res.list_runs}, {"verified", res.verified}};
            alg = res.alg;
        } else if (kind == "rep2glob") {
            double gamma = t.at("gamma").get<double>();
            double tau = t.value("tau", 0.05);
            auto res = rep_to_glob(alg, gamma, tau, built.family, trials, stage_seed);
            for (const auto& c : res.independent_collision)
                rows.push_back(ReportRow{experiment, "independent_collision", c.value, c.ci,
                                         alg.bit_budget, res.alg.sample_size,
                                         res.verified ? "ok" : "failed"});
            summary["rep2glob"] = {{"majority_runs", res.majority_runs},
                                   {"collision_bound", res.collision_bound}};
            alg = res.alg;
        } else if (kind == "glob2rep") {
            double eta = t.at("eta").get<double>();
            double rho = t.at("rho").get<double>();
            double beta = t.value("beta", 0.05);
            double tau_prime = t.value("tau_prime", 0.02);
            auto params = ThresholdingParams::defaults(eta, rho, beta, tau_prime);
            if (t.contains("estimation_runs"))
                params.estimation_runs = t.at("estimation_runs").get<int64_t>();
            auto res = glob_to_rep(alg, built.task, built.family, params, trials, stage_seed);
            for (const auto& c : res.shared_replicability)
                rows.push_back(ReportRow{experiment, "replicability_shared", c.value, c.ci,
                                         res.alg.bit_budget, res.alg.sample_size,
                                         c.value >= res.replicability_bound ? "ok" : "failed"});
            summary["glob2rep"] = {{"threshold_count", params.threshold_count},
                                   {"bits", params.bits},
                                   {"estimation_runs", params.estimation_runs},
                                   {"replicability_bound", res.replicability_bound}};
            alg = res.alg;
        } else if (kind == "amplify") {
            double nu = t.at("nu").get<double>();
            double rho = t.at("rho").get<double>();
            auto res = amplify_replicability(alg, built.task, built.family, nu, rho, trials, stage_seed);
            for (const auto& c : res.replicability)
                rows.push_back(ReportRow{experiment, "amplified_replicability", c.value, c.ci,
                                         res.alg.bit_budget, res.alg.sample_size,
                                         c.value >= 1.0 - rho - c.ci ? "ok" : "failed"});
            summary["amplify"] = {{"tapes", res.tapes_drawn}};
            alg = res.alg;
        } else if (kind == "stab2dp") {
            auto params = DpPipelineParams::defaults(
                t.at("epsilon").get<double>(), t.at("delta").get<double>(),
                t.at("eta").get<double>(), t.value("beta", 0.05));
            if (t.contains("users")) params.users = t.at("users").get<int64_t>();
            if (t.contains("list_runs")) params.list_runs = t.at("list_runs").get<int64_t>();
            auto res = stab_to_dp(alg, built.task, built.family, params,
                                  std::min<int64_t>(trials, 2000), stage_seed);
            summary["stab2dp"] = {{"users", params.users},
                                  {"declared_bits", res.declared_bits},
                                  {"dummy_copies", res.dummy_copies},
                                  {"beta_prime_bound", res.beta_prime_bound}};
            alg = res.alg;
        } else {
            throw ConfigError("transforms: unknown kind '" + kind + "'");
        }
        ++stage;
    }
    return alg;
}

ExperimentOutput run_experiment(const ExperimentConfig& cfg) {
    auto start = std::chrono::steady_clock::now();
    ExperimentOutput out;
    out.summary["experiment"] = cfg.experiment;
    out.summary["master_seed"] = cfg.master_seed;

    BuiltExperiment built = build_task_algorithm(cfg.task);
    MeteredAlgorithm alg;
    try {
        alg = apply_transforms(built, cfg.transforms, cfg.master_seed, cfg.trials, out.rows,
                               cfg.experiment, out.summary);
    } catch (const std::exception& e) {
        out.rows.push_back(ReportRow{cfg.experiment, "transform_chain", 0, 0, 0, 0,
                                     std::string("failed: ") + e.what()});
        out.all_passed = false;
        out.summary["error"] = e.what();
        return out;
    }

    uint64_t vseed = derive_seed(cfg.master_seed, 0xF00D);
    int64_t bits = measure_bits_used(alg, built.dist, std::min<int64_t>(cfg.trials, 512),
                                     derive_seed(vseed, 1));
    for (const auto& what : cfg.verify) {
        try {
            if (what == "replicability-shared" || what == "replicability-independent") {
                bool shared = what == "replicability-shared";
                auto rep = estimate_replicability(alg, built.dist, cfg.trials, shared,
                                                  derive_seed(vseed, shared ? 2 : 3));
                out.rows.push_back(ReportRow{cfg.experiment, what, rep.estimate, rep.ci_halfwidth,
                                             bits, alg.sample_size});
            } else if (what == "confidence") {
                auto conf = estimate_confidence(alg, built.task, built.dist, cfg.trials,
                                                derive_seed(vseed, 4));
                out.rows.push_back(ReportRow{cfg.experiment, "failure_rate", conf.failure_rate,
                                             conf.ci_halfwidth, bits, alg.sample_size});
            } else if (what == "heavy-hitters") {
                double eta = cfg.task.value("hh_eta", 0.1);
                int64_t need = static_cast<int64_t>(
                    std::ceil(8.0 * std::log(2.0 / 0.001) / (eta * eta)));
                auto hh = find_heavy_hitters(alg, built.dist, eta, std::max(cfg.trials, need),
                                             derive_seed(vseed, 5), built.task.output_domain_size);
                for (const auto& h : hh)
                    out.rows.push_back(ReportRow{cfg.experiment,
                                                 "heavy_hitter_" + std::to_string(h.output),
                                                 h.weight, 0, bits, alg.sample_size});
            } else if (what == "audit-dp") {
                if (!cfg.audit.is_object()) throw ConfigError("audit: spec required for audit-dp");
                double eps = cfg.audit.at("epsilon").get<double>();
                std::vector<NeighborPair> pairs;
                if (cfg.audit.value("user_level", false)) {
                    pairs = user_neighbors(cfg.audit.at("domain").get<int>(),
                                           cfg.audit.at("block").get<int>(),
                                           cfg.audit.at("users").get<int>());
                } else {
                    pairs = item_neighbors(cfg.audit.at("domain").get<int>(),
                                           cfg.audit.at("n").get<int>());
                }
                auto audit = audit_dp_exact(alg, pairs, eps, built.task.output_domain_size,
                                            cfg.max_enum_bits);
                out.rows.push_back(ReportRow{cfg.experiment, "delta_max", audit.delta_max, 0, bits,
                                             alg.sample_size});
                out.summary["audit"] = {{"epsilon", eps},
                                        {"delta_max", audit.delta_max},
                                        {"witness_pair", audit.witness_pair},
                                        {"witness_reversed", audit.witness_reversed},
                                        {"pairs", pairs.size()}};
            } else {
                throw ConfigError("verify: unknown metric '" + what + "'");
            }
        } catch (const std::exception& e) {
            out.rows.push_back(
                ReportRow{cfg.experiment, what, 0, 0, 0, 0, std::string("failed: ") + e.what()});
            out.all_passed = false;
        }
    }
    for (const auto& r : out.rows)
        if (r.status != "ok") out.all_passed = false;
    auto end = std::chrono::steady_clock::now();
    out.summary["wall_time_s"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(end - start).count() / 1000.0;
    return out;
}

namespace {

void set_path(nlohmann::json& j, const std::string& dotted, const nlohmann::json& value) {
    nlohmann::json* cur = &j;
    size_t pos = 0;
    while (true) {
        size_t dot = dotted.find('.', pos);
        std::string key = dotted.substr(pos, dot == std::string::npos ? dot : dot - pos);
        bool leaf = dot == std::string::npos;
        nlohmann::json& next = cur->is_array() ? (*cur).at(std::stoul(key)) : (*cur)[key];
        if (leaf) {
            next = value;
            return;
        }
        cur = &next;
        pos = dot + 1;
    }
}

std::string point_tag(const std::vector<std::pair<std::string, nlohmann::json>>& point) {
    std::ostringstream os;
    for (size_t i = 0; i < point.size(); ++i)
        os << (i ? "&" : "?") << point[i].first << "=" << point[i].second.dump();
    return os.str();
}

}  // namespace

ExperimentOutput sweep(const ExperimentConfig& base, const nlohmann::json& grid) {
    if (!grid.is_object() || grid.empty()) throw ConfigError("sweep: grid must be a nonempty object");
    std::vector<std::string> paths;
    for (auto it = grid.begin(); it != grid.end(); ++it) paths.push_back(it.key());
    std::sort(paths.begin(), paths.end());

    nlohmann::json base_json{{"experiment", base.experiment},
                             {"master_seed", base.master_seed},
                             {"trials", base.trials},
                             {"task", base.task},
                             {"transforms", base.transforms},
                             {"verify", base.verify}};
    if (!base.audit.is_null()) base_json["audit"] = base.audit;
    if (!base.pac.is_null()) base_json["pac"] = base.pac;

    ExperimentOutput all;
    std::vector<size_t> idx(paths.size(), 0);
    while (true) {
        nlohmann::json j = base_json;
        std::vector<std::pair<std::string, nlohmann::json>> point;
        for (size_t i = 0; i < paths.size(); ++i) {
            const auto& values = grid.at(paths[i]);
            set_path(j, paths[i], values.at(idx[i]));
            point.push_back({paths[i], values.at(idx[i])});
        }
        std::string tag = point_tag(point);
        j["experiment"] = base.experiment + tag;
        auto res = run_experiment(ExperimentConfig::parse(j));
        for (auto& r : res.rows) all.rows.push_back(r);
        all.summary["points"].push_back(res.summary);
        all.all_passed = all.all_passed && res.all_passed;

        size_t k = 0;
        while (k < paths.size()) {
            if (++idx[k] < grid.at(paths[k]).size()) break;
            idx[k] = 0;
            ++k;
        }
        if (k == paths.size()) break;
    }
    return all;
}

std::string to_csv(const std::vector<ReportRow>& rows) {
    std::ostringstream os;
    os << "experiment,metric,value,ci,bits_used,samples_used,status\n";
    os.precision(12);
    for (const auto& r : rows) {
        os << r.experiment << ',' << r.metric << ',' << r.value << ',' << r.ci << ',' << r.bits_used
           << ',' << r.samples_used << ',' << r.status << '\n';
    }
    return os.str();
}

}  // namespace stability
