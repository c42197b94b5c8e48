#include "drbsde/solution.hpp"

namespace drbsde {

double SolutionBundle::level_mean(const GridFunction& g, std::size_t level) const {
    const auto v = g.level(level);
    const auto w = weights.level(level);
    double acc = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) acc += w[j] * v[j];
    return acc;
}

bool SolutionBundle::upper_reflection_free() const {
    for (double v : dk_minus.flat()) {
        if (v != 0.0) return false;
    }
    return true;
}

bool SolutionBundle::lower_reflection_free() const {
    for (double v : dk_plus.flat()) {
        if (v != 0.0) return false;
    }
    return true;
}

}  // namespace drbsde
