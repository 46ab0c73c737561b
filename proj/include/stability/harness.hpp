#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stability/algorithm.hpp"
#include "stability/task.hpp"

namespace stability {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Parsed experiment description. Unknown top-level keys are rejected and the
// master seed is mandatory; every derived seed flows from it.
struct ExperimentConfig {
    std::string experiment;
    uint64_t master_seed = 0;
    int64_t trials = 10000;
    nlohmann::json task;        // task + algorithm spec
    nlohmann::json transforms;  // array of transform specs, applied in order
    std::vector<std::string> verify;
    nlohmann::json audit;       // optional neighbor-universe spec
    nlohmann::json pac;         // optional PAC experiment spec
    int max_enum_bits = kDefaultEnumCap;

    static ExperimentConfig parse(const nlohmann::json& j);
    static ExperimentConfig load(const std::string& path);
};

// One deterministic output row. Wall-clock timings are reported in the JSON
// summary instead, so a re-run with the same seed reproduces the CSV byte for
// byte.
struct ReportRow {
    std::string experiment;
    std::string metric;
    double value = 0;
    double ci = 0;
    int64_t bits_used = 0;     // tape meter reading, never a formula
    int64_t samples_used = 0;
    std::string status = "ok";
};

std::string to_csv(const std::vector<ReportRow>& rows);

struct ExperimentOutput {
    std::vector<ReportRow> rows;
    nlohmann::json summary;  // witnesses, wall time, parameters
    bool all_passed = true;
};

ExperimentOutput run_experiment(const ExperimentConfig& cfg);

// Cross product of overrides: grid maps dotted config paths to value arrays.
// Rows are tagged with their grid point; ordering is deterministic (sorted
// paths, values in listed order).
ExperimentOutput sweep(const ExperimentConfig& base, const nlohmann::json& grid);

// Task/algorithm construction shared with the CLI.
struct BuiltExperiment {
    StatisticalTask task;
    FiniteDistribution dist;
    MeteredAlgorithm alg;
    std::vector<FiniteDistribution> family;
};

BuiltExperiment build_task_algorithm(const nlohmann::json& task_spec);
MeteredAlgorithm apply_transforms(const BuiltExperiment& built, const nlohmann::json& transforms,
                                  uint64_t seed, int64_t trials, std::vector<ReportRow>& rows,
                                  const std::string& experiment, nlohmann::json& summary);

// Observed maximum read cursor over fresh-sample runs.
int64_t measure_bits_used(const MeteredAlgorithm& alg, const FiniteDistribution& dist,
                          int64_t trials, uint64_t seed);

}  // namespace stability
