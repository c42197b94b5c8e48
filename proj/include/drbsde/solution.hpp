#pragma once

#include <string>

#include "drbsde/grid_function.hpp"

namespace drbsde {

enum class EnsembleKind { lattice, paths };

/// Discrete trajectories of the solution quadruple on grid x state, plus the
/// expectation weights of the generating ensemble.
///
/// Shapes for a grid with N steps: y, state, weights, k_plus, k_minus have
/// N+1 levels; z, dk_plus, dk_minus have N levels (per-step quantities).
/// k_plus/k_minus are cumulative with level 0 equal to zero: on path
/// ensembles they are per-path prefix sums of the increments; on a lattice,
/// where a path identity does not exist, they are accumulated forward by
/// predecessor-probability weighting, so each node carries the conditional
/// mean of the cumulative reflection given the node.
struct SolutionBundle {
    EnsembleKind kind = EnsembleKind::lattice;
    GridFunction y;
    GridFunction z;
    GridFunction dk_plus;
    GridFunction dk_minus;
    GridFunction k_plus;
    GridFunction k_minus;
    GridFunction state;    // underlying state values per (level, idx)
    GridFunction weights;  // expectation weights per level, each level sums to 1

    struct Meta {
        std::string solver;
        double penalty_level = 0.0;
        int iterations = 0;
    } meta;

    std::size_t grid_steps() const { return y.levels() - 1; }

    /// Expectation of a per-state slice under the level weights.
    double level_mean(const GridFunction& g, std::size_t level) const;

    /// max(|dk_minus|) == 0 everywhere; used to detect single-barrier runs.
    bool upper_reflection_free() const;
    bool lower_reflection_free() const;
};

}  // namespace drbsde
