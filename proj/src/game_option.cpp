#include "drbsde/game_option.hpp"

#include <cmath>
#include <stdexcept>

#include "drbsde/errors.hpp"

namespace drbsde {

void GameSpec::validate(const TimeGrid& grid, std::span<const double> state_samples) const {
    for (std::size_t i = 0; i <= grid.steps(); ++i) {
        const double t = grid.node(i);
        for (double s : state_samples) {
            if (lower_payoff && upper_payoff &&
                (*lower_payoff)(t, s) > (*upper_payoff)(t, s)) {
                throw InconsistentBarriersError(
                    "GameSpec: exercise payoff exceeds cancellation payoff");
            }
        }
    }
    const double T = grid.horizon();
    for (double s : state_samples) {
        const double xi = terminal(s);
        if (lower_payoff && (*lower_payoff)(T, s) > xi) {
            throw InconsistentBarriersError("GameSpec: terminal payoff below exercise payoff");
        }
        if (upper_payoff && xi > (*upper_payoff)(T, s)) {
            throw InconsistentBarriersError("GameSpec: terminal payoff above cancellation payoff");
        }
    }
}

double evaluate_payoff(const GameSpec& spec, std::size_t tau, std::size_t nu,
                       std::span<const double> trajectory, const TimeGrid& grid) {
    const std::size_t n = grid.steps();
    if (tau > n || nu > n) {
        throw std::invalid_argument("evaluate_payoff: stopping index out of range");
    }
    if (trajectory.size() != n + 1) {
        throw std::invalid_argument("evaluate_payoff: trajectory does not match the grid");
    }
    if (std::min(tau, nu) == n) {
        return spec.terminal(trajectory[n]);
    }
    if (nu < tau) {
        if (!spec.upper_payoff) {
            throw std::invalid_argument("evaluate_payoff: cancellation without an upper payoff");
        }
        return (*spec.upper_payoff)(grid.node(nu), trajectory[nu]);
    }
    if (!spec.lower_payoff) {
        throw std::invalid_argument("evaluate_payoff: exercise without a lower payoff");
    }
    return (*spec.lower_payoff)(grid.node(tau), trajectory[tau]);
}

DynkinValue dynkin_tree_oracle(const GameSpec& spec, const Lattice& lattice,
                               const TimeGrid& grid) {
    const std::size_t n = grid.steps();
    if (lattice.n_steps() != n) {
        throw std::invalid_argument("dynkin_tree_oracle: lattice does not match the grid");
    }

    DynkinValue out;
    out.values.resize(n + 1);
    out.policy.exercise.resize(n + 1);
    out.policy.cancel.resize(n + 1);

    out.values[n].resize(n + 1);
    out.policy.exercise[n].assign(n + 1, 0);
    out.policy.cancel[n].assign(n + 1, 0);
    for (std::size_t j = 0; j <= n; ++j) {
        out.values[n][j] = spec.terminal(lattice.node_value(n, j));
    }

    for (std::size_t ii = n; ii-- > 0;) {
        const std::size_t i = ii;
        const double t = grid.node(i);
        const double disc = 1.0 / (1.0 + spec.market.rate(t) * grid.dt(i));
        const double p = lattice.prob_up(i);
        auto& cur = out.values[i];
        const auto& nxt = out.values[i + 1];
        cur.resize(i + 1);
        out.policy.exercise[i].assign(i + 1, 0);
        out.policy.cancel[i].assign(i + 1, 0);
        for (std::size_t j = 0; j <= i; ++j) {
            const double s = lattice.node_value(i, j);
            const double cont = disc * (p * nxt[j + 1] + (1.0 - p) * nxt[j]);
            double v = cont;
            if (spec.lower_payoff) {
                const double lo = (*spec.lower_payoff)(t, s);
                if (spec.upper_payoff && lo > (*spec.upper_payoff)(t, s)) {
                    throw InconsistentBarriersError(
                        "dynkin_tree_oracle: exercise payoff exceeds cancellation payoff");
                }
                if (v < lo) {
                    v = lo;
                    out.policy.exercise[i][j] = 1;
                }
            }
            if (spec.upper_payoff) {
                const double up = (*spec.upper_payoff)(t, s);
                if (v > up) {
                    v = up;
                    out.policy.cancel[i][j] = 1;
                }
            }
            cur[j] = v;
        }
    }
    out.value = out.values[0][0];
    return out;
}

ProblemData game_problem(const GameSpec& spec) {
    ProblemData p;
    p.terminal = spec.terminal;
    p.generator = Generator::discounting(spec.market.rate);
    p.lower = spec.lower_payoff;
    p.upper = spec.upper_payoff;
    return p;
}

namespace {

ExerciseRegions extract_regions(const SolutionBundle& sol, const GameSpec& spec,
                                const TimeGrid& grid, double tol) {
    ExerciseRegions regions;
    regions.tolerance = tol;
    const std::size_t n = sol.grid_steps();
    regions.exercise.resize(n + 1);
    regions.cancel.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        const double t = grid.node(i);
        const auto y = sol.y.level(i);
        const auto s = sol.state.level(i);
        regions.exercise[i].assign(y.size(), 0);
        regions.cancel[i].assign(y.size(), 0);
        for (std::size_t j = 0; j < y.size(); ++j) {
            if (spec.lower_payoff &&
                std::abs(y[j] - (*spec.lower_payoff)(t, s[j])) <= tol) {
                regions.exercise[i][j] = 1;
            }
            if (spec.upper_payoff &&
                std::abs(y[j] - (*spec.upper_payoff)(t, s[j])) <= tol) {
                regions.cancel[i][j] = 1;
            }
        }
    }
    return regions;
}

}  // namespace

PriceResult price_game_option(const GameSpec& spec, PricingEngine engine,
                              CondExpBackend& backend, const TimeGrid& grid,
                              double penalty_level, const PicardConfig& picard) {
    if (!spec.lower_payoff && !spec.upper_payoff) {
        throw std::invalid_argument("price_game_option: at least one payoff is required");
    }
    const ProblemData problem = game_problem(spec);
    const WeightProfile w = sample_weights(problem.generator, grid);

    PriceResult res;
    switch (engine) {
        case PricingEngine::clamped:
            res.solution = solve_clamped(problem, backend, grid, w);
            break;
        case PricingEngine::penalized:
            res.solution = solve_penalized(problem, penalty_level, backend, grid, w);
            break;
        case PricingEngine::picard:
            res.solution = picard_solve(problem, picard, backend, grid, w).solution;
            break;
    }
    res.value = res.solution.level_mean(res.solution.y, 0);
    res.regions = extract_regions(res.solution, spec, grid, 1e-9);
    return res;
}

}  // namespace drbsde
