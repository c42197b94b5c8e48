#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace drbsde {

/// Values attached to (time level, state) pairs. Levels may have different
/// widths: a path ensemble is rectangular, a recombining lattice has i+1
/// states at level i.
class GridFunction {
public:
    GridFunction() = default;

    static GridFunction rectangular(std::size_t levels, std::size_t width, double init = 0.0);
    static GridFunction triangular(std::size_t levels, double init = 0.0);

    std::size_t levels() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
    std::size_t width(std::size_t level) const { return offsets_[level + 1] - offsets_[level]; }

    std::span<double> level(std::size_t i) {
        return {values_.data() + offsets_[i], width(i)};
    }
    std::span<const double> level(std::size_t i) const {
        return {values_.data() + offsets_[i], width(i)};
    }

    double& at(std::size_t level, std::size_t idx) { return values_[offsets_[level] + idx]; }
    double at(std::size_t level, std::size_t idx) const { return values_[offsets_[level] + idx]; }

    bool same_shape(const GridFunction& other) const { return offsets_ == other.offsets_; }

    std::span<const double> flat() const { return values_; }
    std::span<double> flat() { return values_; }

private:
    std::vector<std::size_t> offsets_;  // one per level plus a trailing end
    std::vector<double> values_;
};

}  // namespace drbsde
