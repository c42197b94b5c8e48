#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "drbsde/market.hpp"
#include "drbsde/time_grid.hpp"

namespace drbsde {

/// Recombining binomial lattice over a uniform grid. Node j at level i holds
/// s0 * up^j * down^(i-j). A single up multiplier exp(sigma_bar sqrt(dt)) is
/// used for every step, with sigma_bar the average of the volatility curve
/// over the step nodes, so a time-varying sigma recombines at the price of a
/// documented approximation; the per-step risk-neutral probability
/// (exp(r dt) - down) / (up - down) still matches each step's drift exactly.
///
/// Where a solver needs E[V dB]/dt, the lattice substitutes its normalized
/// martingale increment (the unique zero-mean, variance-dt two-point
/// variable), giving the exact tree analogue of the Brownian regression.
class Lattice {
public:
    static Lattice build(const MarketCurves& curves, const TimeGrid& grid);

    /// Direct construction from multipliers and per-step up-probabilities.
    Lattice(double s0, double up, double down, std::vector<double> prob_up,
            std::vector<double> dt);

    std::size_t n_steps() const { return prob_up_.size(); }
    double node_value(std::size_t level, std::size_t j) const;
    double prob_up(std::size_t step) const { return prob_up_[step]; }
    double dt(std::size_t step) const { return dt_[step]; }

    /// Exact one-step conditional expectation: next has level+2 entries,
    /// out has level+1.
    void condexp(std::size_t step, std::span<const double> next, std::span<double> out) const;

    /// E[V * M]/dt with M the normalized martingale increment of the step.
    void condexp_increment(std::size_t step, std::span<const double> next,
                           std::span<double> out) const;

    /// Probability of each node at a level under the tree measure.
    std::span<const double> level_prob(std::size_t level) const { return level_prob_[level]; }

private:
    double s0_, up_, down_;
    std::vector<double> prob_up_;
    std::vector<double> dt_;
    std::vector<std::vector<double>> level_prob_;

    void fill_level_probabilities();
};

}  // namespace drbsde
