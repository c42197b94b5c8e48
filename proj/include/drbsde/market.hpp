#pragma once

#include <functional>

#include "drbsde/brownian.hpp"
#include "drbsde/grid_function.hpp"
#include "drbsde/time_grid.hpp"

namespace drbsde {

/// Black-Scholes market coefficient curves and spot.
struct MarketCurves {
    std::function<double(double)> rate;
    std::function<double(double)> risk_premium;
    std::function<double(double)> sigma;
    double s0 = 1.0;

    static MarketCurves constants(double r, double theta, double sigma, double s0);
};

/// Asset values per (level, path) built by the log-Euler update
///   log S_{i+1} = log S_i + (r + theta*sigma - sigma^2/2) dt + sigma dB,
/// which keeps S strictly positive pathwise.
struct MarketPaths {
    GridFunction s;  // levels N+1, width n_paths
    double s0 = 0.0;

    static MarketPaths simulate(const MarketCurves& curves, const PathEnsemble& paths,
                                const TimeGrid& grid);
};

}  // namespace drbsde
