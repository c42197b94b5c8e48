#pragma once

#include <optional>
#include <vector>

#include "drbsde/backend.hpp"
#include "drbsde/problem.hpp"
#include "drbsde/solution.hpp"
#include "drbsde/time_grid.hpp"
#include "drbsde/weights.hpp"

namespace drbsde {

/// Generator with the reflection penalties folded in:
///   g(t,s,y,z) = f(t,y,z) - n (y - U(t,s))^+ + n (y - L(t,s))^-.
/// State-aware because the barriers are. The declared Lipschitz envelope in
/// y grows to mu + n.
struct PenalizedGenerator {
    Generator base;
    double n = 0.0;
    std::optional<SurfaceFn> lower;
    std::optional<SurfaceFn> upper;

    double eval(double t, double s, double y, double z) const;
    double mu(double t) const;
    double gamma(double t) const { return base.gamma(t); }
};

PenalizedGenerator penalize_generator(Generator f, double n, std::optional<SurfaceFn> lower,
                                      std::optional<SurfaceFn> upper);

/// Increasing penalty levels for convergence studies.
struct PenaltySchedule {
    std::vector<int> levels;

    /// 1, 2, 4, ..., 256.
    static PenaltySchedule doubling(int first = 1, int last = 256);
    void validate() const;
};

/// Which barriers the penalized scheme handles by penalty. With
/// `all_barriers` every present barrier is penalized (the completely
/// separated construction, and the single-barrier special cases). With
/// `upper_only` the lower barrier is reflected exactly (clamped) and only
/// the upper one is penalized (the regular-obstacle construction).
enum class PenaltyMode { all_barriers, upper_only };

struct PicardConfig {
    double tol = 1e-8;  // threshold on the squared B^2 distance of iterates
    int max_iter = 25;
};

struct PicardResult {
    SolutionBundle solution;
    /// distances[k] is the squared B^2 distance between iterates k+1 and k
    /// (iterate 0 is the zero guess).
    std::vector<double> distances;
    bool converged = false;
    /// Index of the iterate the next application of the map confirmed as
    /// fixed within tol; a generator that ignores (y, z) converges in 1.
    int iterations = 0;
};

/// Plain backward scheme: Y_N = xi; Z_i from the martingale-increment
/// projection; Y_i solves Y_i = E_i[Y_{i+1}] + f(t_i, Y_i, Z_i) dt_i,
/// implicit in y (inner fixed point, contractive while mu dt < 1) and
/// explicit in z. Rejects problems carrying barriers.
SolutionBundle solve_bsde(const ProblemData& problem, CondExpBackend& backend,
                          const TimeGrid& grid, const WeightProfile& w);

/// Penalized scheme at level n; requires (mu + n) dt < 1 nodewise. Records
/// the penalty consumption K increments n(Y-L)^- dt and n(Y-U)^+ dt.
SolutionBundle solve_penalized(const ProblemData& problem, double n, CondExpBackend& backend,
                               const TimeGrid& grid, const WeightProfile& w,
                               PenaltyMode mode = PenaltyMode::all_barriers);

/// Exact discrete reflection: the implicit predictor is projected into
/// [L, U] and the projection amounts become the K increments, so the
/// discrete complementarity holds exactly by construction.
SolutionBundle solve_clamped(const ProblemData& problem, CondExpBackend& backend,
                             const TimeGrid& grid, const WeightProfile& w);

/// Fixed-point loop of the solution map: freeze the generator arguments at
/// the previous iterate, solve the exact-reflection problem with that data,
/// repeat until the squared B^2 distance of successive iterates falls below
/// tol. Requires beta > 5.
PicardResult picard_solve(const ProblemData& problem, const PicardConfig& cfg,
                          CondExpBackend& backend, const TimeGrid& grid,
                          const WeightProfile& w);

/// Weight profile sampled from a generator's declared envelope.
WeightProfile sample_weights(const Generator& gen, const TimeGrid& grid, double eps = 1e-4,
                             double beta = 6.0);

}  // namespace drbsde
