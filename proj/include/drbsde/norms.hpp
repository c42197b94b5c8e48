#pragma once

#include "drbsde/solution.hpp"
#include "drbsde/time_grid.hpp"
#include "drbsde/weights.hpp"

namespace drbsde {

/// The beta-weighted quadratic norms. Time integrals use left-endpoint
/// quadrature over steps 0..N-1; expectations use the bundle's level
/// weights. On path ensembles sup_norm is the path average of the pathwise
/// max of exp(beta A)|Y|^2; on a lattice it is the max over levels of the
/// level expectation (the pathwise max is not a function of the node).
struct NormReport {
    double sup_norm = 0.0;
    double aY_norm = 0.0;
    double Z_norm = 0.0;
    double combined = 0.0;  // aY_norm + Z_norm, the squared B^2 norm
};

NormReport beta_norms(const SolutionBundle& sol, const WeightProfile& w, const TimeGrid& grid);

/// Squared B^2 distance between two solutions on the same ensemble:
/// aY_norm + Z_norm of the componentwise difference.
double beta_distance_sq(const SolutionBundle& a, const SolutionBundle& b,
                        const WeightProfile& w, const TimeGrid& grid);

/// Same distance on raw (Y, Z) tables sharing one set of level weights.
double beta_distance_sq(const GridFunction& ya, const GridFunction& za, const GridFunction& yb,
                        const GridFunction& zb, const GridFunction& level_weights,
                        const WeightProfile& w, const TimeGrid& grid);

}  // namespace drbsde
