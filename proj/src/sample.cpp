#include "stability/sample.hpp"

namespace stability {

double sample_pit(const Sample& s, const FiniteDistribution& dist) {
    // F(x_1..x_n) = sum_j [prod_{i<j} p(x_i)] * F_<(x_j), the mass of all
    // lexicographically smaller samples.
    double acc = 0;
    double scale = 1;
    for (int64_t j = 0; j < s.size(); ++j) {
        int x = s.at(j);
        double below = 0;
        for (int e = 0; e < x; ++e) below += dist.prob(e);
        acc += scale * below;
        scale *= dist.prob(x);
    }
    return acc;
}

}  // namespace stability
