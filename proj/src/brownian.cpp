#include "drbsde/brownian.hpp"

#include <cmath>
#include <stdexcept>

#include "drbsde/parallel.hpp"
#include "drbsde/rng.hpp"

namespace drbsde {

PathEnsemble PathEnsemble::simulate(const TimeGrid& grid, std::size_t n_paths, std::size_t dim,
                                    std::uint64_t seed) {
    if (n_paths < 1) {
        throw std::invalid_argument("PathEnsemble: need at least one path");
    }
    if (dim < 1) {
        throw std::invalid_argument("PathEnsemble: dimension must be positive");
    }
    PathEnsemble e;
    e.n_paths_ = n_paths;
    e.dim_ = dim;
    e.n_steps_ = grid.steps();
    e.seed_ = seed;
    e.data_.resize(e.n_steps_ * n_paths * dim);

    std::vector<double> sqrt_dt(e.n_steps_);
    for (std::size_t i = 0; i < e.n_steps_; ++i) sqrt_dt[i] = std::sqrt(grid.dt(i));

    auto* out = e.data_.data();
    parallel::parallel_for(n_paths, [&](std::size_t p) {
        for (std::size_t i = 0; i < e.n_steps_; ++i) {
            for (std::size_t c = 0; c < dim; ++c) {
                out[(i * n_paths + p) * dim + c] = sqrt_dt[i] * rng::normal(seed, p, i, c);
            }
        }
    });
    return e;
}

}  // namespace drbsde
