#include "stability/task.hpp"

#include <cmath>
#include <stdexcept>

namespace stability {

void TaskParameters::validate() const {
    auto in_unit = [](double v) { return v > 0 && v < 1; };
    if (!in_unit(beta)) throw std::invalid_argument("beta must be in (0,1)");
    if (!in_unit(rho)) throw std::invalid_argument("rho must be in (0,1)");
    if (!in_unit(eta)) throw std::invalid_argument("eta must be in (0,1)");
    if (!(alpha > 0 && alpha <= 1)) throw std::invalid_argument("alpha must be in (0,1]");
    if (!(epsilon > 0)) throw std::invalid_argument("epsilon must be positive");
    if (!in_unit(delta)) throw std::invalid_argument("delta must be in (0,1)");
    if (users < 1) throw std::invalid_argument("users must be >= 1");
}

StatisticalTask oracle_task(int data_domain_size, int num_outputs, std::vector<int> rejected) {
    StatisticalTask t;
    t.id = "oracle";
    t.data_domain_size = data_domain_size;
    t.output_domain_size = num_outputs + 1;
    t.bottom = num_outputs;
    t.accepted = [rejected = std::move(rejected)](const FiniteDistribution&, int y) {
        for (int r : rejected)
            if (r == y) return false;
        return true;
    };
    return t;
}

StatisticalTask coin_bias_task(double alpha) {
    if (!(alpha > 0 && alpha <= 1)) throw std::invalid_argument("coin_bias_task: bad grid step");
    int grid = static_cast<int>(std::floor(1.0 / alpha)) + 1;
    StatisticalTask t;
    t.id = "coin-bias";
    t.data_domain_size = 2;
    t.output_domain_size = grid + 1;
    t.bottom = grid;
    t.accepted = [alpha, grid](const FiniteDistribution& d, int y) {
        if (y >= grid) return false;
        double p = d.prob(1);
        double guess = y * alpha;
        return std::abs(guess - p) <= alpha + 1e-15;
    };
    return t;
}

StatisticalTask sign_task() {
    StatisticalTask t;
    t.id = "sign";
    t.data_domain_size = 2;
    t.output_domain_size = 3;
    t.bottom = 2;
    t.accepted = [](const FiniteDistribution& d, int y) {
        double p = d.prob(1);
        if (y == 0) return p <= 0.5;
        if (y == 1) return p >= 0.5;
        return false;
    };
    return t;
}

}  // namespace stability
