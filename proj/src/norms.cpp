#include "drbsde/norms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace drbsde {

namespace {

void check_shapes(const SolutionBundle& sol, const WeightProfile& w, const TimeGrid& grid) {
    const std::size_t n_nodes = grid.steps() + 1;
    if (sol.y.levels() != n_nodes || sol.z.levels() != grid.steps()) {
        throw std::invalid_argument("beta_norms: solution shape does not match the grid");
    }
    if (w.a_sq.size() != n_nodes) {
        throw std::invalid_argument("beta_norms: weight profile does not match the grid");
    }
    if (!sol.y.same_shape(sol.weights)) {
        throw std::invalid_argument("beta_norms: missing or mismatched level weights");
    }
}

}  // namespace

NormReport beta_norms(const SolutionBundle& sol, const WeightProfile& w, const TimeGrid& grid) {
    check_shapes(sol, w, grid);
    const std::size_t n_steps = grid.steps();

    NormReport report;
    for (std::size_t i = 0; i < n_steps; ++i) {
        const double ew = std::exp(w.beta * w.cum_a[i]);
        const auto y = sol.y.level(i);
        const auto z = sol.z.level(i);
        const auto lw = sol.weights.level(i);
        double ey2 = 0.0, ez2 = 0.0;
        for (std::size_t j = 0; j < y.size(); ++j) ey2 += lw[j] * y[j] * y[j];
        for (std::size_t j = 0; j < z.size(); ++j) ez2 += lw[j] * z[j] * z[j];
        report.aY_norm += ew * w.a_sq[i] * ey2 * grid.dt(i);
        report.Z_norm += ew * ez2 * grid.dt(i);
    }

    if (sol.kind == EnsembleKind::paths) {
        const std::size_t n_paths = sol.y.width(0);
        std::vector<double> path_max(n_paths, 0.0);
        for (std::size_t i = 0; i <= n_steps; ++i) {
            const double ew = std::exp(w.beta * w.cum_a[i]);
            const auto y = sol.y.level(i);
            for (std::size_t p = 0; p < n_paths; ++p) {
                path_max[p] = std::max(path_max[p], ew * y[p] * y[p]);
            }
        }
        const auto lw = sol.weights.level(0);
        for (std::size_t p = 0; p < n_paths; ++p) report.sup_norm += lw[p] * path_max[p];
    } else {
        for (std::size_t i = 0; i <= n_steps; ++i) {
            const double ew = std::exp(w.beta * w.cum_a[i]);
            const auto y = sol.y.level(i);
            const auto lw = sol.weights.level(i);
            double ey2 = 0.0;
            for (std::size_t j = 0; j < y.size(); ++j) ey2 += lw[j] * y[j] * y[j];
            report.sup_norm = std::max(report.sup_norm, ew * ey2);
        }
    }

    report.combined = report.aY_norm + report.Z_norm;
    return report;
}

double beta_distance_sq(const SolutionBundle& a, const SolutionBundle& b,
                        const WeightProfile& w, const TimeGrid& grid) {
    check_shapes(a, w, grid);
    return beta_distance_sq(a.y, a.z, b.y, b.z, a.weights, w, grid);
}

double beta_distance_sq(const GridFunction& ya_g, const GridFunction& za_g,
                        const GridFunction& yb_g, const GridFunction& zb_g,
                        const GridFunction& level_weights, const WeightProfile& w,
                        const TimeGrid& grid) {
    if (!ya_g.same_shape(yb_g) || !za_g.same_shape(zb_g)) {
        throw std::invalid_argument("beta_distance_sq: solutions live on different ensembles");
    }
    double ay = 0.0, zz = 0.0;
    for (std::size_t i = 0; i < grid.steps(); ++i) {
        const double ew = std::exp(w.beta * w.cum_a[i]);
        const auto ya = ya_g.level(i), yb = yb_g.level(i);
        const auto za = za_g.level(i), zb = zb_g.level(i);
        const auto lw = level_weights.level(i);
        double ey2 = 0.0, ez2 = 0.0;
        for (std::size_t j = 0; j < ya.size(); ++j) {
            const double d = ya[j] - yb[j];
            ey2 += lw[j] * d * d;
        }
        for (std::size_t j = 0; j < za.size(); ++j) {
            const double d = za[j] - zb[j];
            ez2 += lw[j] * d * d;
        }
        ay += ew * w.a_sq[i] * ey2 * grid.dt(i);
        zz += ew * ez2 * grid.dt(i);
    }
    return ay + zz;
}

}  // namespace drbsde
