#pragma once

#include <functional>
#include <string>
#include <vector>

#include "stability/finite_distribution.hpp"

namespace stability {

// A statistical task: data domain X = {0..data_domain_size-1}, output domain
// Y = {0..output_domain_size-1} totally ordered by index (phi), and a pure
// per-distribution accepted-solution predicate. bottom is the distinguished
// never-accepted output some transforms may return when their candidate set
// comes up empty, or -1 when the task has none; by convention it takes the
// last index so it never wins a phi-minimal tie-break.
struct StatisticalTask {
    std::string id;
    int data_domain_size = 0;
    int output_domain_size = 0;
    int bottom = -1;
    std::function<bool(const FiniteDistribution&, int)> accepted;
};

inline bool is_correct(const StatisticalTask& task, const FiniteDistribution& dist, int y) {
    if (y < 0 || y >= task.output_domain_size) throw std::invalid_argument("is_correct: y outside output domain");
    if (y == task.bottom) return false;
    return task.accepted(dist, y);
}

struct TaskParameters {
    double beta = 0.05;        // confidence
    double rho = 0.49;         // replicability target
    double eta = 0.5;          // stability parameter
    double alpha = 0.1;        // accuracy
    double epsilon = 1.0;      // privacy
    double delta = 0.05;
    int64_t users = 1;         // user count T

    void validate() const;
};

// --- task zoo (selectable by string id in CLI configs) ---

// Generic task over an explicit output set; accepts every non-bottom output
// unless a reject list is given. Used with oracle algorithms.
StatisticalTask oracle_task(int data_domain_size, int num_outputs,
                            std::vector<int> rejected = {});

// Estimate a coin's bias on a grid of step alpha; outputs are the grid points
// plus bottom, accepted within alpha of the true bias p = D(1).
StatisticalTask coin_bias_task(double alpha);

// Sign of p - 1/2 over X = {0,1}; outputs {minus, plus, bottom}.
StatisticalTask sign_task();

}  // namespace stability
