#include "drbsde/weights.hpp"

#include <algorithm>
#include <stdexcept>

namespace drbsde {

WeightProfile WeightProfile::build(std::vector<double> mu, std::vector<double> gamma,
                                   double eps, double beta, const TimeGrid& grid) {
    const std::size_t n_nodes = grid.steps() + 1;
    if (mu.size() != n_nodes || gamma.size() != n_nodes) {
        throw std::invalid_argument("WeightProfile: mu/gamma must have one value per node");
    }
    if (!(eps > 0.0)) {
        throw std::invalid_argument("WeightProfile: eps must be positive");
    }
    if (!(beta > 0.0)) {
        throw std::invalid_argument("WeightProfile: beta must be positive");
    }
    for (std::size_t i = 0; i < n_nodes; ++i) {
        if (mu[i] < 0.0 || gamma[i] < 0.0) {
            throw std::invalid_argument("WeightProfile: mu and gamma must be nonnegative");
        }
    }
    WeightProfile w;
    w.mu = std::move(mu);
    w.gamma = std::move(gamma);
    w.eps = eps;
    w.beta = beta;
    w.a_sq.resize(n_nodes);
    for (std::size_t i = 0; i < n_nodes; ++i) {
        w.a_sq[i] = std::max(w.mu[i] + w.gamma[i] * w.gamma[i], eps);
    }
    w.cum_a.resize(n_nodes);
    w.cum_a[0] = 0.0;
    for (std::size_t i = 0; i + 1 < n_nodes; ++i) {
        w.cum_a[i + 1] = w.cum_a[i] + w.a_sq[i] * grid.dt(i);
    }
    return w;
}

WeightProfile WeightProfile::constant(double mu, double gamma, double eps, double beta,
                                      const TimeGrid& grid) {
    const std::size_t n_nodes = grid.steps() + 1;
    return build(std::vector<double>(n_nodes, mu), std::vector<double>(n_nodes, gamma),
                 eps, beta, grid);
}

}  // namespace drbsde
