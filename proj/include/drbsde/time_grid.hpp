#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace drbsde {

/// Discrete time mesh 0 = t_0 < t_1 < ... < t_N = T.
class TimeGrid {
public:
    /// Uniform mesh with step T/steps.
    static TimeGrid uniform(double horizon, std::size_t steps);

    /// Arbitrary strictly increasing nodes starting at 0.
    explicit TimeGrid(std::vector<double> nodes);

    std::size_t steps() const { return nodes_.size() - 1; }
    double horizon() const { return nodes_.back(); }
    double node(std::size_t i) const { return nodes_[i]; }
    double dt(std::size_t i) const { return nodes_[i + 1] - nodes_[i]; }
    std::span<const double> nodes() const { return nodes_; }

    /// True when all steps are equal to within 1e-12 relative.
    bool is_uniform() const;

private:
    std::vector<double> nodes_;
};

}  // namespace drbsde
