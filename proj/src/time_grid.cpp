#include "drbsde/time_grid.hpp"

#include <cmath>
#include <stdexcept>

namespace drbsde {

TimeGrid TimeGrid::uniform(double horizon, std::size_t steps) {
    if (!(horizon > 0.0)) {
        throw std::invalid_argument("TimeGrid: horizon must be positive");
    }
    if (steps < 1) {
        throw std::invalid_argument("TimeGrid: need at least one step");
    }
    std::vector<double> nodes(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i) {
        nodes[i] = horizon * static_cast<double>(i) / static_cast<double>(steps);
    }
    nodes[steps] = horizon;
    return TimeGrid(std::move(nodes));
}

TimeGrid::TimeGrid(std::vector<double> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.size() < 2) {
        throw std::invalid_argument("TimeGrid: need at least two nodes");
    }
    if (nodes_.front() != 0.0) {
        throw std::invalid_argument("TimeGrid: first node must be 0");
    }
    double sum_dt = 0.0;
    for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
        const double dt = nodes_[i + 1] - nodes_[i];
        if (!(dt > 0.0)) {
            throw std::invalid_argument("TimeGrid: nodes must be strictly increasing");
        }
        sum_dt += dt;
    }
    if (std::abs(sum_dt - horizon()) > 1e-12 * std::max(1.0, horizon())) {
        throw std::invalid_argument("TimeGrid: steps do not add up to the horizon");
    }
}

bool TimeGrid::is_uniform() const {
    const double ref = dt(0);
    for (std::size_t i = 1; i < steps(); ++i) {
        if (std::abs(dt(i) - ref) > 1e-12 * std::max(1.0, ref)) return false;
    }
    return true;
}

}  // namespace drbsde
