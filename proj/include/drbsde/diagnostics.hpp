#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "drbsde/backend.hpp"
#include "drbsde/problem.hpp"
#include "drbsde/solution.hpp"
#include "drbsde/solver.hpp"
#include "drbsde/time_grid.hpp"
#include "drbsde/weights.hpp"

namespace drbsde {

/// Discrete complementarity residuals: expectations of
/// sum_i (Y_i - L_i) dK+_i and sum_i (U_i - Y_i) dK-_i. Exactly zero for
/// clamped output by construction.
struct SkorokhodResidual {
    double lower = 0.0;
    double upper = 0.0;
};

SkorokhodResidual skorokhod_residual(const SolutionBundle& sol, const ProblemData& problem,
                                     const TimeGrid& grid);

/// Nodewise ordering check Y_a <= Y_b, optionally with the reverse order
/// K+_a >= K+_b of the cumulative reflections. The K order is a theorem only
/// for single-lower-barrier problems sharing one barrier, so the caller
/// picks: `automatic` checks it when both runs never touched an upper
/// barrier, `require` always, `skip` never.
enum class ReflectionOrderCheck { automatic, require, skip };

struct ComparisonResult {
    bool ordered = false;
    double worst_y_violation = 0.0;  // max of (Y_a - Y_b); <= tol when ordered
    bool k_checked = false;
    double worst_k_violation = 0.0;  // max of (K_b - K_a)
};

ComparisonResult comparison_check(const SolutionBundle& a, const SolutionBundle& b,
                                  double tol = 1e-8,
                                  ReflectionOrderCheck k_order = ReflectionOrderCheck::automatic);

/// Empirical ratio of the a priori estimate: the solution-side energy over
/// the data-side energy. Zero data yields ratio 0 by convention.
double apriori_ratio(const SolutionBundle& sol, const ProblemData& problem,
                     const WeightProfile& w, const TimeGrid& grid);

/// Alternating barrier touch times per path: tau_0 = 0, then the first node
/// after the previous touch with Y <= L, then the first with Y >= U, and so
/// on, capped at l_max entries.
struct CrossingTrace {
    struct PathTrace {
        std::vector<std::size_t> touches;  // starts with 0
        bool stationary = false;           // exhausted before the cap
    };
    std::vector<PathTrace> paths;
};

CrossingTrace crossing_times(const SolutionBundle& sol, const ProblemData& problem,
                             const TimeGrid& grid, std::size_t l_max = 64);

/// One row per penalty level of a convergence study against the clamped
/// reference on a common grid fine enough for the stiffest level.
struct ConvergenceRow {
    int n = 0;
    double value = 0.0;                // expectation of Y^n at t = 0
    double max_upper_violation = 0.0;  // sup (Y^n - U)^+
    double max_lower_violation = 0.0;  // sup (L - Y^n)^+
    double dist_sq_to_clamped = 0.0;   // squared B^2 distance
    double n_times_upper = 0.0;
    double n_times_lower = 0.0;
};

struct ConvergenceReport {
    std::vector<ConvergenceRow> rows;
    std::size_t grid_steps = 0;  // the common refined grid
    bool distance_nonincreasing = false;
    double clamped_reference_value = 0.0;  // expectation of Y_0
};

using BackendFactory = std::function<std::unique_ptr<CondExpBackend>(const TimeGrid&)>;

/// Solves the penalized scheme at every schedule level and the clamped
/// reference once, all on one uniform grid refined so that
/// (mu_max + n_max) dt stays below safety < 1.
ConvergenceReport convergence_study(const ProblemData& problem, const PenaltySchedule& schedule,
                                    const BackendFactory& make_backend, const TimeGrid& base_grid,
                                    double eps, double beta,
                                    PenaltyMode mode = PenaltyMode::all_barriers,
                                    double safety = 0.8);

}  // namespace drbsde
