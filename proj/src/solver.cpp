#include "drbsde/solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "drbsde/errors.hpp"
#include "drbsde/norms.hpp"
#include "drbsde/parallel.hpp"

namespace drbsde {

namespace {

constexpr double kInnerTol = 1e-15;
constexpr int kInnerMaxIter = 200;

/// One backward sweep shared by every solver. The generator is evaluated
/// per (step, state index); penalties and clamps are applied as configured.
struct BackwardSweep {
    CondExpBackend& backend;
    const TimeGrid& grid;
    std::function<double(std::size_t, std::size_t, double, double)> f;  // (i, j, y, z)
    std::vector<double> lipschitz_dt;  // per step, must stay < 1
    const SurfaceFn* clamp_lower = nullptr;
    const SurfaceFn* clamp_upper = nullptr;
    const SurfaceFn* pen_lower = nullptr;
    const SurfaceFn* pen_upper = nullptr;
    double penalty_n = 0.0;

    SolutionBundle run(const std::function<double(double)>& terminal, const std::string& tag) {
        const std::size_t n = backend.n_steps();
        if (grid.steps() != n) {
            throw std::invalid_argument("solver: backend and grid disagree on step count");
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (lipschitz_dt[i] >= 1.0) {
                throw StepSizeError("solver: Lipschitz rate times step size reaches 1 at step " +
                                    std::to_string(i) + "; refine the grid");
            }
        }

        SolutionBundle sol;
        sol.kind = backend.kind();
        sol.y = backend.node_shaped();
        sol.z = backend.step_shaped();
        sol.dk_plus = backend.step_shaped();
        sol.dk_minus = backend.step_shaped();
        sol.state = backend.states();
        sol.weights = backend.weights();
        sol.meta.solver = tag;
        sol.meta.penalty_level = penalty_n;

        const bool two_sided = (clamp_lower || pen_lower) && (clamp_upper || pen_upper);
        {
            auto yN = sol.y.level(n);
            const auto sN = sol.state.level(n);
            const double T = grid.node(n);
            for (std::size_t j = 0; j < yN.size(); ++j) {
                yN[j] = terminal(sN[j]);
                if (two_sided) {
                    const SurfaceFn* lo = clamp_lower ? clamp_lower : pen_lower;
                    const SurfaceFn* up = clamp_upper ? clamp_upper : pen_upper;
                    if ((*lo)(T, sN[j]) > yN[j] || yN[j] > (*up)(T, sN[j])) {
                        throw InconsistentBarriersError(
                            "solver: terminal condition escapes the barrier band");
                    }
                }
            }
        }

        const SurfaceFn* lower = clamp_lower ? clamp_lower : pen_lower;
        const SurfaceFn* upper = clamp_upper ? clamp_upper : pen_upper;

        std::vector<double> expects, lower_vals, upper_vals;
        for (std::size_t ii = n; ii-- > 0;) {
            const std::size_t i = ii;
            const double t = grid.node(i);
            const double dt = grid.dt(i);
            const auto next = sol.y.level(i + 1);
            auto y = sol.y.level(i);
            auto z = sol.z.level(i);
            auto dkp = sol.dk_plus.level(i);
            auto dkm = sol.dk_minus.level(i);
            const auto s = sol.state.level(i);
            const std::size_t m = y.size();

            expects.resize(m);
            backend.condexp(i, next, expects);
            backend.condexp_increment(i, next, z);

            if (lower) {
                lower_vals.resize(m);
                for (std::size_t j = 0; j < m; ++j) lower_vals[j] = (*lower)(t, s[j]);
            }
            if (upper) {
                upper_vals.resize(m);
                for (std::size_t j = 0; j < m; ++j) upper_vals[j] = (*upper)(t, s[j]);
            }
            if (lower && upper) {
                for (std::size_t j = 0; j < m; ++j) {
                    if (lower_vals[j] > upper_vals[j]) {
                        throw InconsistentBarriersError(
                            "solver: lower barrier exceeds upper at t=" + std::to_string(t));
                    }
                }
            }

            parallel::parallel_for(m, [&](std::size_t j) {
                auto rhs = [&](double yy) {
                    double v = f(i, j, yy, z[j]);
                    if (pen_lower) v += penalty_n * std::max(lower_vals[j] - yy, 0.0);
                    if (pen_upper) v -= penalty_n * std::max(yy - upper_vals[j], 0.0);
                    return expects[j] + v * dt;
                };
                double cur = expects[j];
                for (int it = 0; it < kInnerMaxIter; ++it) {
                    const double nxt = rhs(cur);
                    const bool done = std::abs(nxt - cur) <= kInnerTol * (1.0 + std::abs(nxt));
                    cur = nxt;
                    if (done) break;
                }
                const double predictor = cur;

                if (pen_lower) {
                    dkp[j] = penalty_n * std::max(lower_vals[j] - predictor, 0.0) * dt;
                }
                if (pen_upper) {
                    dkm[j] = penalty_n * std::max(predictor - upper_vals[j], 0.0) * dt;
                }

                double value = predictor;
                if (clamp_lower && value < lower_vals[j]) {
                    dkp[j] += lower_vals[j] - predictor;
                    value = lower_vals[j];
                }
                if (clamp_upper && value > upper_vals[j]) {
                    dkm[j] += predictor - upper_vals[j];
                    value = upper_vals[j];
                }
                y[j] = value;
            });
        }

        sol.k_plus = backend.accumulate(sol.dk_plus);
        sol.k_minus = backend.accumulate(sol.dk_minus);
        return sol;
    }
};

std::vector<double> envelope_dt(const Generator& gen, const TimeGrid& grid, double extra) {
    std::vector<double> v(grid.steps());
    for (std::size_t i = 0; i < grid.steps(); ++i) {
        v[i] = (gen.mu(grid.node(i)) + extra) * grid.dt(i);
    }
    return v;
}

std::function<double(std::size_t, std::size_t, double, double)> plain_eval(
    const Generator& gen, const TimeGrid& grid) {
    return [&gen, &grid](std::size_t i, std::size_t, double y, double z) {
        return gen.f(grid.node(i), y, z);
    };
}

void check_profile(const WeightProfile& w, const TimeGrid& grid) {
    if (w.a_sq.size() != grid.steps() + 1) {
        throw std::invalid_argument("solver: weight profile does not match the grid");
    }
}

}  // namespace

double PenalizedGenerator::eval(double t, double s, double y, double z) const {
    double v = base.f(t, y, z);
    if (upper) v -= n * std::max(y - (*upper)(t, s), 0.0);
    if (lower) v += n * std::max((*lower)(t, s) - y, 0.0);
    return v;
}

double PenalizedGenerator::mu(double t) const {
    return base.mu(t) + ((lower || upper) ? n : 0.0);
}

PenalizedGenerator penalize_generator(Generator f, double n, std::optional<SurfaceFn> lower,
                                      std::optional<SurfaceFn> upper) {
    if (n < 0.0) {
        throw std::invalid_argument("penalize_generator: penalty level must be nonnegative");
    }
    if (n > 0.0 && !lower && !upper) {
        throw std::invalid_argument("penalize_generator: a positive penalty needs a barrier");
    }
    return {std::move(f), n, std::move(lower), std::move(upper)};
}

PenaltySchedule PenaltySchedule::doubling(int first, int last) {
    PenaltySchedule s;
    for (int n = first; n <= last; n *= 2) s.levels.push_back(n);
    s.validate();
    return s;
}

void PenaltySchedule::validate() const {
    if (levels.empty()) {
        throw std::invalid_argument("PenaltySchedule: empty schedule");
    }
    int prev = 0;
    for (int n : levels) {
        if (n <= prev) {
            throw std::invalid_argument("PenaltySchedule: levels must be strictly increasing");
        }
        prev = n;
    }
}

SolutionBundle solve_bsde(const ProblemData& problem, CondExpBackend& backend,
                          const TimeGrid& grid, const WeightProfile& w) {
    check_profile(w, grid);
    if (problem.has_lower() || problem.has_upper()) {
        throw std::invalid_argument("solve_bsde: barriers present; use a reflecting solver");
    }
    BackwardSweep sweep{backend, grid, plain_eval(problem.generator, grid),
                        envelope_dt(problem.generator, grid, 0.0)};
    return sweep.run(problem.terminal, "bsde");
}

SolutionBundle solve_penalized(const ProblemData& problem, double n, CondExpBackend& backend,
                               const TimeGrid& grid, const WeightProfile& w,
                               PenaltyMode mode) {
    check_profile(w, grid);
    if (n < 0.0) {
        throw std::invalid_argument("solve_penalized: penalty level must be nonnegative");
    }
    BackwardSweep sweep{backend, grid, plain_eval(problem.generator, grid),
                        envelope_dt(problem.generator, grid,
                                    (problem.has_lower() || problem.has_upper()) ? n : 0.0)};
    sweep.penalty_n = n;
    if (mode == PenaltyMode::upper_only) {
        if (!problem.has_upper()) {
            throw std::invalid_argument(
                "solve_penalized: upper_only mode needs an upper barrier");
        }
        sweep.pen_upper = &*problem.upper;
        if (problem.has_lower()) sweep.clamp_lower = &*problem.lower;
    } else {
        if (problem.has_lower()) sweep.pen_lower = &*problem.lower;
        if (problem.has_upper()) sweep.pen_upper = &*problem.upper;
    }
    SolutionBundle sol = sweep.run(problem.terminal, "penalized");
    sol.meta.penalty_level = n;
    return sol;
}

SolutionBundle solve_clamped(const ProblemData& problem, CondExpBackend& backend,
                             const TimeGrid& grid, const WeightProfile& w) {
    check_profile(w, grid);
    if (!problem.has_lower() && !problem.has_upper()) {
        throw std::invalid_argument("solve_clamped: no barrier present; use solve_bsde");
    }
    BackwardSweep sweep{backend, grid, plain_eval(problem.generator, grid),
                        envelope_dt(problem.generator, grid, 0.0)};
    if (problem.has_lower()) sweep.clamp_lower = &*problem.lower;
    if (problem.has_upper()) sweep.clamp_upper = &*problem.upper;
    return sweep.run(problem.terminal, "clamped");
}

PicardResult picard_solve(const ProblemData& problem, const PicardConfig& cfg,
                          CondExpBackend& backend, const TimeGrid& grid,
                          const WeightProfile& w) {
    if (!(cfg.tol > 0.0)) {
        throw std::invalid_argument("picard_solve: tolerance must be positive");
    }
    if (cfg.max_iter < 1) {
        throw std::invalid_argument("picard_solve: need at least one iteration");
    }
    if (!(w.beta > 5.0)) {
        throw std::invalid_argument("picard_solve: the contraction argument needs beta > 5");
    }
    check_profile(w, grid);

    GridFunction prev_y = backend.node_shaped();
    GridFunction prev_z = backend.step_shaped();

    PicardResult result;
    for (int k = 1; k <= cfg.max_iter + 1; ++k) {
        BackwardSweep sweep{
            backend, grid,
            [&problem, &grid, &prev_y, &prev_z](std::size_t i, std::size_t j, double, double) {
                return problem.generator.f(grid.node(i), prev_y.at(i, j), prev_z.at(i, j));
            },
            std::vector<double>(grid.steps(), 0.0)};
        if (problem.has_lower()) sweep.clamp_lower = &*problem.lower;
        if (problem.has_upper()) sweep.clamp_upper = &*problem.upper;
        SolutionBundle iterate = sweep.run(problem.terminal, "picard");

        const double dist =
            beta_distance_sq(iterate.y, iterate.z, prev_y, prev_z, iterate.weights, w, grid);
        result.distances.push_back(dist);
        prev_y = iterate.y;
        prev_z = iterate.z;
        result.solution = std::move(iterate);
        if (dist <= cfg.tol) {
            result.converged = true;
            result.iterations = k - 1;
            break;
        }
        result.iterations = std::min(k, cfg.max_iter);
    }
    result.solution.meta.solver = "picard";
    result.solution.meta.iterations = result.iterations;
    return result;
}

WeightProfile sample_weights(const Generator& gen, const TimeGrid& grid, double eps,
                             double beta) {
    const std::size_t n_nodes = grid.steps() + 1;
    std::vector<double> mu(n_nodes), gamma(n_nodes);
    for (std::size_t i = 0; i < n_nodes; ++i) {
        mu[i] = gen.mu(grid.node(i));
        gamma[i] = gen.gamma(grid.node(i));
    }
    return WeightProfile::build(std::move(mu), std::move(gamma), eps, beta, grid);
}

}  // namespace drbsde
