#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "drbsde/time_grid.hpp"

namespace drbsde {

/// Simulated Brownian increments on a grid. Each increment is drawn as
/// Normal(0, dt_i) per component through the counter RNG, so regeneration
/// with the same (seed, grid, n_paths, dim) is bit-identical regardless of
/// thread count.
class PathEnsemble {
public:
    static PathEnsemble simulate(const TimeGrid& grid, std::size_t n_paths, std::size_t dim,
                                 std::uint64_t seed);

    std::size_t n_paths() const { return n_paths_; }
    std::size_t dim() const { return dim_; }
    std::size_t n_steps() const { return n_steps_; }
    std::uint64_t seed() const { return seed_; }

    double increment(std::size_t step, std::size_t path, std::size_t component = 0) const {
        return data_[(step * n_paths_ + path) * dim_ + component];
    }

private:
    std::size_t n_paths_ = 0;
    std::size_t dim_ = 0;
    std::size_t n_steps_ = 0;
    std::uint64_t seed_ = 0;
    std::vector<double> data_;  // step-major, then path, then component
};

}  // namespace drbsde
