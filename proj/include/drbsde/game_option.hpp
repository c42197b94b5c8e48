#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "drbsde/backend.hpp"
#include "drbsde/lattice.hpp"
#include "drbsde/market.hpp"
#include "drbsde/problem.hpp"
#include "drbsde/solution.hpp"
#include "drbsde/solver.hpp"
#include "drbsde/time_grid.hpp"

namespace drbsde {

/// Game (Israeli) option: the holder may exercise for the lower payoff, the
/// issuer may cancel for the upper one, and holding to expiry pays the
/// terminal payoff. An absent payoff acts as an infinitely remote barrier.
struct GameSpec {
    MarketCurves market;
    std::optional<SurfaceFn> lower_payoff;   // holder exercise L(t, S)
    std::optional<SurfaceFn> upper_payoff;   // issuer cancellation U(t, S)
    std::function<double(double)> terminal;  // xi(S_T)

    /// Checks L <= U along a trajectory sample and the terminal squeeze
    /// L(T,.) <= xi <= U(T,.); throws on violation.
    void validate(const TimeGrid& grid, std::span<const double> state_samples) const;
};

/// Undiscounted stopped payoff: U at nu when nu < tau, L at tau when
/// tau <= nu and tau < N, the terminal payoff when both stop at N.
double evaluate_payoff(const GameSpec& spec, std::size_t tau, std::size_t nu,
                       std::span<const double> trajectory, const TimeGrid& grid);

/// Active-barrier sets of a priced solution: nodes where Y sits on L
/// (holder exercises) or on U (issuer cancels) within tolerance.
struct ExerciseRegions {
    std::vector<std::vector<std::uint8_t>> exercise;  // per level
    std::vector<std::vector<std::uint8_t>> cancel;
    double tolerance = 1e-9;
};

/// Value and first-touch policy of the discrete Dynkin game by direct
/// backward induction on the lattice:
///   V_N = xi,  V_i = min(U_i, max(L_i, E_i[V_{i+1}] / (1 + r(t_i) dt))).
/// Implemented without the solver module; the one-step discount matches the
/// implicit scheme so both routes realize the same dynamic program.
struct DynkinValue {
    double value = 0.0;                       // root
    std::vector<std::vector<double>> values;  // per level
    ExerciseRegions policy;                   // first-touch stopping sets
};

DynkinValue dynkin_tree_oracle(const GameSpec& spec, const Lattice& lattice,
                               const TimeGrid& grid);

enum class PricingEngine { clamped, penalized, picard };

struct PriceResult {
    double value = 0.0;
    ExerciseRegions regions;
    SolutionBundle solution;
};

/// Prices the game option as the reflected BSDE with generator -r(t) y and
/// barriers given by the payoffs, under the risk-neutral backend (the risk
/// premium curve plays no role in pricing).
PriceResult price_game_option(const GameSpec& spec, PricingEngine engine,
                              CondExpBackend& backend, const TimeGrid& grid,
                              double penalty_level = 256.0,
                              const PicardConfig& picard = {});

/// The (terminal, generator, barriers) tuple the pricer solves.
ProblemData game_problem(const GameSpec& spec);

}  // namespace drbsde
