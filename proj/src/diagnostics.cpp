#include "drbsde/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "drbsde/errors.hpp"
#include "drbsde/norms.hpp"

namespace drbsde {

SkorokhodResidual skorokhod_residual(const SolutionBundle& sol, const ProblemData& problem,
                                     const TimeGrid& grid) {
    if (sol.grid_steps() != grid.steps()) {
        throw std::invalid_argument("skorokhod_residual: solution does not match the grid");
    }
    if (!problem.has_lower() && !sol.lower_reflection_free()) {
        throw InconsistencyError("skorokhod_residual: K+ recorded without a lower barrier");
    }
    if (!problem.has_upper() && !sol.upper_reflection_free()) {
        throw InconsistencyError("skorokhod_residual: K- recorded without an upper barrier");
    }

    SkorokhodResidual r;
    for (std::size_t i = 0; i < grid.steps(); ++i) {
        const double t = grid.node(i);
        const auto y = sol.y.level(i);
        const auto s = sol.state.level(i);
        const auto w = sol.weights.level(i);
        const auto dkp = sol.dk_plus.level(i);
        const auto dkm = sol.dk_minus.level(i);
        for (std::size_t j = 0; j < y.size(); ++j) {
            if (problem.has_lower()) {
                r.lower += w[j] * (y[j] - (*problem.lower)(t, s[j])) * dkp[j];
            }
            if (problem.has_upper()) {
                r.upper += w[j] * ((*problem.upper)(t, s[j]) - y[j]) * dkm[j];
            }
        }
    }
    return r;
}

ComparisonResult comparison_check(const SolutionBundle& a, const SolutionBundle& b,
                                  double tol, ReflectionOrderCheck k_order) {
    if (!a.y.same_shape(b.y)) {
        throw std::invalid_argument("comparison_check: solutions live on different grids");
    }
    ComparisonResult res;
    res.worst_y_violation = -1e300;
    const auto& ya = a.y.flat();
    const auto& yb = b.y.flat();
    for (std::size_t i = 0; i < ya.size(); ++i) {
        res.worst_y_violation = std::max(res.worst_y_violation, ya[i] - yb[i]);
    }
    res.ordered = res.worst_y_violation <= tol;

    const bool check_k =
        k_order == ReflectionOrderCheck::require ||
        (k_order == ReflectionOrderCheck::automatic && a.upper_reflection_free() &&
         b.upper_reflection_free());
    if (check_k) {
        res.k_checked = true;
        res.worst_k_violation = -1e300;
        const auto& ka = a.k_plus.flat();
        const auto& kb = b.k_plus.flat();
        for (std::size_t i = 0; i < ka.size(); ++i) {
            res.worst_k_violation = std::max(res.worst_k_violation, kb[i] - ka[i]);
        }
        res.ordered = res.ordered && res.worst_k_violation <= tol;
    }
    return res;
}

double apriori_ratio(const SolutionBundle& sol, const ProblemData& problem,
                     const WeightProfile& w, const TimeGrid& grid) {
    const NormReport norms = beta_norms(sol, w, grid);
    const std::size_t n = grid.steps();

    // Solution-side energy: norms plus the expected squared total reflection.
    double ek2 = 0.0;
    {
        const auto kp = sol.k_plus.level(n);
        const auto km = sol.k_minus.level(n);
        const auto lw = sol.weights.level(n);
        for (std::size_t j = 0; j < kp.size(); ++j) {
            ek2 += lw[j] * (kp[j] * kp[j] + km[j] * km[j]);
        }
    }
    const double lhs = norms.sup_norm + norms.aY_norm + norms.Z_norm + ek2;

    // Data-side energy.
    double rhs = 0.0;
    {
        const double ew = std::exp(w.beta * w.cum_a[n]);
        const auto y = sol.y.level(n);
        const auto lw = sol.weights.level(n);
        double e = 0.0;
        for (std::size_t j = 0; j < y.size(); ++j) e += lw[j] * y[j] * y[j];
        rhs += ew * e;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double f0 = problem.generator.f(grid.node(i), 0.0, 0.0);
        rhs += std::exp(w.beta * w.cum_a[i]) * f0 * f0 / w.a_sq[i] * grid.dt(i);
    }
    if (problem.has_lower() || problem.has_upper()) {
        if (sol.kind == EnsembleKind::paths) {
            const std::size_t n_paths = sol.y.width(0);
            std::vector<double> path_max(n_paths, 0.0);
            for (std::size_t i = 0; i <= n; ++i) {
                const double ew2 = std::exp(2.0 * w.beta * w.cum_a[i]);
                const double t = grid.node(i);
                const auto s = sol.state.level(i);
                for (std::size_t p = 0; p < n_paths; ++p) {
                    double v = 0.0;
                    if (problem.has_lower()) {
                        const double lp = std::max((*problem.lower)(t, s[p]), 0.0);
                        v += lp * lp;
                    }
                    if (problem.has_upper()) {
                        const double um = std::max(-(*problem.upper)(t, s[p]), 0.0);
                        v += um * um;
                    }
                    path_max[p] = std::max(path_max[p], ew2 * v);
                }
            }
            const auto lw = sol.weights.level(0);
            for (std::size_t p = 0; p < n_paths; ++p) rhs += lw[p] * path_max[p];
        } else {
            double level_max = 0.0;
            for (std::size_t i = 0; i <= n; ++i) {
                const double ew2 = std::exp(2.0 * w.beta * w.cum_a[i]);
                const double t = grid.node(i);
                const auto s = sol.state.level(i);
                const auto lw = sol.weights.level(i);
                double e = 0.0;
                for (std::size_t j = 0; j < s.size(); ++j) {
                    double v = 0.0;
                    if (problem.has_lower()) {
                        const double lp = std::max((*problem.lower)(t, s[j]), 0.0);
                        v += lp * lp;
                    }
                    if (problem.has_upper()) {
                        const double um = std::max(-(*problem.upper)(t, s[j]), 0.0);
                        v += um * um;
                    }
                    e += lw[j] * v;
                }
                level_max = std::max(level_max, ew2 * e);
            }
            rhs += level_max;
        }
    }
    if (rhs == 0.0) return 0.0;
    return lhs / rhs;
}

CrossingTrace crossing_times(const SolutionBundle& sol, const ProblemData& problem,
                             const TimeGrid& grid, std::size_t l_max) {
    if (!problem.has_lower() || !problem.has_upper()) {
        throw std::invalid_argument("crossing_times: both barriers are required");
    }
    if (sol.kind != EnsembleKind::paths) {
        throw std::invalid_argument("crossing_times: touch times need a path ensemble");
    }
    const std::size_t n = grid.steps();
    const std::size_t n_paths = sol.y.width(0);

    // Strict separation check at every sampled node.
    for (std::size_t i = 0; i <= n; ++i) {
        const double t = grid.node(i);
        const auto s = sol.state.level(i);
        for (std::size_t j = 0; j < s.size(); ++j) {
            if ((*problem.lower)(t, s[j]) >= (*problem.upper)(t, s[j])) {
                throw InconsistentBarriersError(
                    "crossing_times: barriers are not strictly separated");
            }
        }
    }

    CrossingTrace trace;
    trace.paths.resize(n_paths);
    for (std::size_t p = 0; p < n_paths; ++p) {
        auto& pt = trace.paths[p];
        pt.touches.push_back(0);
        bool next_is_lower = true;
        std::size_t from = 1;  // touch times are strict: search after the previous one
        while (pt.touches.size() < l_max) {
            std::size_t hit = n + 1;
            for (std::size_t i = from; i <= n; ++i) {
                const double y = sol.y.at(i, p);
                const double bar = next_is_lower
                                       ? (*problem.lower)(grid.node(i), sol.state.at(i, p))
                                       : (*problem.upper)(grid.node(i), sol.state.at(i, p));
                if ((next_is_lower && y <= bar) || (!next_is_lower && y >= bar)) {
                    hit = i;
                    break;
                }
            }
            if (hit > n) {
                pt.stationary = true;  // no further crossing before T
                break;
            }
            pt.touches.push_back(hit);
            if (hit == n) {
                pt.stationary = true;
                break;
            }
            next_is_lower = !next_is_lower;
            from = hit + 1;
        }
    }
    return trace;
}

ConvergenceReport convergence_study(const ProblemData& problem, const PenaltySchedule& schedule,
                                    const BackendFactory& make_backend, const TimeGrid& base_grid,
                                    double eps, double beta, PenaltyMode mode, double safety) {
    schedule.validate();
    if (!problem.has_lower() && !problem.has_upper()) {
        throw std::invalid_argument("convergence_study: a barrier is required");
    }
    if (!(safety > 0.0 && safety < 1.0)) {
        throw std::invalid_argument("convergence_study: safety must lie in (0,1)");
    }

    // One uniform grid fine enough for the stiffest level keeps the
    // distances comparable across the schedule.
    double mu_max = 0.0;
    for (std::size_t i = 0; i <= base_grid.steps(); ++i) {
        mu_max = std::max(mu_max, problem.generator.mu(base_grid.node(i)));
    }
    const int n_max = schedule.levels.back();
    const double horizon = base_grid.horizon();
    const std::size_t needed =
        static_cast<std::size_t>(std::ceil(horizon * (mu_max + n_max) / safety));
    const std::size_t steps = std::max(base_grid.steps(), needed);
    const TimeGrid grid = TimeGrid::uniform(horizon, steps);
    const WeightProfile w = sample_weights(problem.generator, grid, eps, beta);

    ConvergenceReport report;
    report.grid_steps = steps;

    auto clamped_backend = make_backend(grid);
    const SolutionBundle clamped = solve_clamped(problem, *clamped_backend, grid, w);
    report.clamped_reference_value = clamped.level_mean(clamped.y, 0);

    for (int n : schedule.levels) {
        auto backend = make_backend(grid);
        SolutionBundle pen;
        try {
            pen = solve_penalized(problem, n, *backend, grid, w, mode);
        } catch (const StepSizeError& e) {
            throw StepSizeError(std::string(e.what()) + " (penalty level " +
                                std::to_string(n) + ")");
        }

        ConvergenceRow row;
        row.n = n;
        row.value = pen.level_mean(pen.y, 0);
        for (std::size_t i = 0; i <= grid.steps(); ++i) {
            const double t = grid.node(i);
            const auto y = pen.y.level(i);
            const auto s = pen.state.level(i);
            for (std::size_t j = 0; j < y.size(); ++j) {
                if (problem.has_upper()) {
                    row.max_upper_violation = std::max(
                        row.max_upper_violation, y[j] - (*problem.upper)(t, s[j]));
                }
                if (problem.has_lower()) {
                    row.max_lower_violation = std::max(
                        row.max_lower_violation, (*problem.lower)(t, s[j]) - y[j]);
                }
            }
        }
        row.max_upper_violation = std::max(row.max_upper_violation, 0.0);
        row.max_lower_violation = std::max(row.max_lower_violation, 0.0);
        row.dist_sq_to_clamped = beta_distance_sq(pen, clamped, w, grid);
        row.n_times_upper = n * row.max_upper_violation;
        row.n_times_lower = n * row.max_lower_violation;
        report.rows.push_back(row);
    }

    report.distance_nonincreasing = true;
    for (std::size_t i = 1; i < report.rows.size(); ++i) {
        if (report.rows[i].dist_sq_to_clamped >
            report.rows[i - 1].dist_sq_to_clamped * (1.0 + 1e-12)) {
            report.distance_nonincreasing = false;
        }
    }
    return report;
}

}  // namespace drbsde
