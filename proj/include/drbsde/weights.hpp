#pragma once

#include <cstddef>
#include <vector>

#include "drbsde/time_grid.hpp"

namespace drbsde {

/// Per-node stochastic Lipschitz data: rates mu, gamma, the combined square
/// rate a^2 = max(mu + gamma^2, eps) and its running left-endpoint integral
/// A(t_i). The exponent beta weights all norms as exp(beta * A(t)).
struct WeightProfile {
    std::vector<double> mu;      // per node, >= 0
    std::vector<double> gamma;   // per node, >= 0
    std::vector<double> a_sq;    // per node, >= eps
    std::vector<double> cum_a;   // A(t_i), cum_a[0] = 0, nondecreasing
    double eps = 1e-4;
    double beta = 6.0;

    /// Builds the derived fields; floors a^2 at eps nodewise.
    static WeightProfile build(std::vector<double> mu, std::vector<double> gamma,
                               double eps, double beta, const TimeGrid& grid);

    /// Constant-rate convenience.
    static WeightProfile constant(double mu, double gamma, double eps, double beta,
                                  const TimeGrid& grid);
};

}  // namespace drbsde
