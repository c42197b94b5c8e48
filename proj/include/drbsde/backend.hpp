#pragma once

#include <memory>
#include <span>

#include "drbsde/brownian.hpp"
#include "drbsde/grid_function.hpp"
#include "drbsde/lattice.hpp"
#include "drbsde/market.hpp"
#include "drbsde/regression.hpp"
#include "drbsde/solution.hpp"

namespace drbsde {

/// Conditional-expectation engine the backward solvers run against. Two
/// realizations: the exact recombining lattice (one state per node) and
/// regression Monte Carlo (one state per path).
class CondExpBackend {
public:
    virtual ~CondExpBackend() = default;

    virtual EnsembleKind kind() const = 0;
    virtual std::size_t n_steps() const = 0;
    virtual std::size_t n_states(std::size_t level) const = 0;
    virtual double state(std::size_t level, std::size_t idx) const = 0;

    /// E[ next | F_i ]; next is shaped for level step+1, out for level step.
    virtual void condexp(std::size_t step, std::span<const double> next,
                         std::span<double> out) = 0;

    /// E[ next * dB_step | F_i ] / dt_step, the martingale-increment
    /// projection that recovers Z.
    virtual void condexp_increment(std::size_t step, std::span<const double> next,
                                   std::span<double> out) = 0;

    virtual void level_weights(std::size_t level, std::span<double> out) const = 0;

    /// Turns per-step reflection increments (levels N) into the cumulative
    /// process (levels N+1, level 0 zero). Paths: per-path prefix sums.
    /// Lattice: forward accumulation by predecessor probabilities.
    virtual GridFunction accumulate(const GridFunction& dk) const = 0;

    GridFunction node_shaped(double init = 0.0) const;  // levels N+1
    GridFunction step_shaped(double init = 0.0) const;  // levels N
    GridFunction states() const;
    GridFunction weights() const;
};

class LatticeBackend final : public CondExpBackend {
public:
    explicit LatticeBackend(const Lattice& lattice) : lattice_(&lattice) {}

    EnsembleKind kind() const override { return EnsembleKind::lattice; }
    std::size_t n_steps() const override { return lattice_->n_steps(); }
    std::size_t n_states(std::size_t level) const override { return level + 1; }
    double state(std::size_t level, std::size_t idx) const override {
        return lattice_->node_value(level, idx);
    }
    void condexp(std::size_t step, std::span<const double> next,
                 std::span<double> out) override {
        lattice_->condexp(step, next, out);
    }
    void condexp_increment(std::size_t step, std::span<const double> next,
                           std::span<double> out) override {
        lattice_->condexp_increment(step, next, out);
    }
    void level_weights(std::size_t level, std::span<double> out) const override;
    GridFunction accumulate(const GridFunction& dk) const override;

private:
    const Lattice* lattice_;
};

/// Least-squares Monte Carlo backend: per-step polynomial projection on a
/// transform of the state column.
class RegressionBackend final : public CondExpBackend {
public:
    RegressionBackend(GridFunction states, const PathEnsemble& paths, const TimeGrid& grid,
                      int degree, BasisTransform transform);

    static RegressionBackend for_market(const MarketPaths& market, const PathEnsemble& paths,
                                        const TimeGrid& grid, int degree = 3,
                                        BasisTransform transform = BasisTransform::log_state);
    /// State is the running Brownian sum; identity transform.
    static RegressionBackend for_brownian(const PathEnsemble& paths, const TimeGrid& grid,
                                          int degree = 3);

    EnsembleKind kind() const override { return EnsembleKind::paths; }
    std::size_t n_steps() const override { return n_steps_; }
    std::size_t n_states(std::size_t) const override { return n_paths_; }
    double state(std::size_t level, std::size_t idx) const override {
        return states_.at(level, idx);
    }
    void condexp(std::size_t step, std::span<const double> next,
                 std::span<double> out) override;
    void condexp_increment(std::size_t step, std::span<const double> next,
                           std::span<double> out) override;
    void level_weights(std::size_t level, std::span<double> out) const override;
    GridFunction accumulate(const GridFunction& dk) const override;

    /// Fit from the most recent condexp call at each step.
    const PolynomialFit* last_fit(std::size_t step) const;

private:
    GridFunction states_;
    const PathEnsemble* paths_;
    const TimeGrid* grid_;
    std::size_t n_paths_, n_steps_;
    int degree_;
    BasisTransform transform_;
    std::vector<std::unique_ptr<PolynomialFit>> fits_;
};

/// Backend that owns its lattice.
std::unique_ptr<CondExpBackend> make_lattice_backend(Lattice lattice);

/// Backend that owns its path ensemble; the grid must outlive it.
std::unique_ptr<CondExpBackend> make_regression_backend(PathEnsemble paths, GridFunction states,
                                                        const TimeGrid& grid, int degree,
                                                        BasisTransform transform);

}  // namespace drbsde
