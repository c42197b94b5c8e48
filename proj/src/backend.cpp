#include "drbsde/backend.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "drbsde/parallel.hpp"

namespace drbsde {

GridFunction CondExpBackend::node_shaped(double init) const {
    if (kind() == EnsembleKind::lattice) {
        return GridFunction::triangular(n_steps() + 1, init);
    }
    return GridFunction::rectangular(n_steps() + 1, n_states(0), init);
}

GridFunction CondExpBackend::step_shaped(double init) const {
    if (kind() == EnsembleKind::lattice) {
        return GridFunction::triangular(n_steps(), init);
    }
    return GridFunction::rectangular(n_steps(), n_states(0), init);
}

GridFunction CondExpBackend::states() const {
    GridFunction g = node_shaped();
    for (std::size_t i = 0; i <= n_steps(); ++i) {
        auto lv = g.level(i);
        for (std::size_t j = 0; j < lv.size(); ++j) lv[j] = state(i, j);
    }
    return g;
}

GridFunction CondExpBackend::weights() const {
    GridFunction g = node_shaped();
    for (std::size_t i = 0; i <= n_steps(); ++i) level_weights(i, g.level(i));
    return g;
}

void LatticeBackend::level_weights(std::size_t level, std::span<double> out) const {
    const auto p = lattice_->level_prob(level);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = p[j];
}

GridFunction LatticeBackend::accumulate(const GridFunction& dk) const {
    const std::size_t n = n_steps();
    GridFunction k = GridFunction::triangular(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto cur_k = k.level(i);
        const auto cur_dk = dk.level(i);
        const auto cur_p = lattice_->level_prob(i);
        auto nxt_k = k.level(i + 1);
        const double p = lattice_->prob_up(i);
        for (std::size_t j = 0; j <= i + 1; ++j) {
            // Predecessors of node (i+1, j): (i, j) via a down move and
            // (i, j-1) via an up move, Bayes-weighted by reachability.
            double mass = 0.0, acc = 0.0;
            if (j <= i) {
                const double w = cur_p[j] * (1.0 - p);
                mass += w;
                acc += w * (cur_k[j] + cur_dk[j]);
            }
            if (j >= 1) {
                const double w = cur_p[j - 1] * p;
                mass += w;
                acc += w * (cur_k[j - 1] + cur_dk[j - 1]);
            }
            nxt_k[j] = mass > 0.0 ? acc / mass : 0.0;
        }
    }
    return k;
}

RegressionBackend::RegressionBackend(GridFunction states, const PathEnsemble& paths,
                                     const TimeGrid& grid, int degree, BasisTransform transform)
    : states_(std::move(states)),
      paths_(&paths),
      grid_(&grid),
      n_paths_(paths.n_paths()),
      n_steps_(grid.steps()),
      degree_(degree),
      transform_(transform),
      fits_(n_steps_) {
    if (paths.dim() != 1) {
        throw std::invalid_argument("RegressionBackend: driving noise must be one-dimensional");
    }
    if (paths.n_steps() != n_steps_) {
        throw std::invalid_argument("RegressionBackend: path ensemble does not match the grid");
    }
    if (states_.levels() != n_steps_ + 1 || states_.width(0) != n_paths_) {
        throw std::invalid_argument("RegressionBackend: state table has the wrong shape");
    }
    if (degree < 0) {
        throw std::invalid_argument("RegressionBackend: degree must be nonnegative");
    }
}

RegressionBackend RegressionBackend::for_market(const MarketPaths& market,
                                                const PathEnsemble& paths, const TimeGrid& grid,
                                                int degree, BasisTransform transform) {
    return RegressionBackend(market.s, paths, grid, degree, transform);
}

RegressionBackend RegressionBackend::for_brownian(const PathEnsemble& paths,
                                                  const TimeGrid& grid, int degree) {
    GridFunction states = GridFunction::rectangular(grid.steps() + 1, paths.n_paths(), 0.0);
    for (std::size_t p = 0; p < paths.n_paths(); ++p) {
        double b = 0.0;
        for (std::size_t i = 0; i < grid.steps(); ++i) {
            b += paths.increment(i, p);
            states.at(i + 1, p) = b;
        }
    }
    return RegressionBackend(std::move(states), paths, grid, degree, BasisTransform::identity);
}

void RegressionBackend::condexp(std::size_t step, std::span<const double> next,
                                std::span<double> out) {
    auto fit = std::make_unique<PolynomialFit>(
        PolynomialFit::fit(states_.level(step), next, degree_, transform_));
    fit->predict_all(states_.level(step), out);
    fits_[step] = std::move(fit);
}

void RegressionBackend::condexp_increment(std::size_t step, std::span<const double> next,
                                          std::span<double> out) {
    const double inv_dt = 1.0 / grid_->dt(step);
    std::vector<double> target(n_paths_);
    for (std::size_t p = 0; p < n_paths_; ++p) {
        target[p] = next[p] * paths_->increment(step, p) * inv_dt;
    }
    const auto fit = PolynomialFit::fit(states_.level(step), target, degree_, transform_);
    fit.predict_all(states_.level(step), out);
}

void RegressionBackend::level_weights(std::size_t, std::span<double> out) const {
    const double w = 1.0 / static_cast<double>(n_paths_);
    for (auto& v : out) v = w;
}

GridFunction RegressionBackend::accumulate(const GridFunction& dk) const {
    GridFunction k = GridFunction::rectangular(n_steps_ + 1, n_paths_, 0.0);
    for (std::size_t i = 0; i < n_steps_; ++i) {
        const auto cur = k.level(i);
        const auto inc = dk.level(i);
        auto nxt = k.level(i + 1);
        for (std::size_t p = 0; p < n_paths_; ++p) nxt[p] = cur[p] + inc[p];
    }
    return k;
}

const PolynomialFit* RegressionBackend::last_fit(std::size_t step) const {
    return fits_[step] ? fits_[step].get() : nullptr;
}

namespace {

class OwningLatticeBackend final : public CondExpBackend {
public:
    explicit OwningLatticeBackend(Lattice lattice)
        : lattice_(std::move(lattice)), impl_(lattice_) {}

    EnsembleKind kind() const override { return impl_.kind(); }
    std::size_t n_steps() const override { return impl_.n_steps(); }
    std::size_t n_states(std::size_t level) const override { return impl_.n_states(level); }
    double state(std::size_t level, std::size_t idx) const override {
        return impl_.state(level, idx);
    }
    void condexp(std::size_t step, std::span<const double> next,
                 std::span<double> out) override {
        impl_.condexp(step, next, out);
    }
    void condexp_increment(std::size_t step, std::span<const double> next,
                           std::span<double> out) override {
        impl_.condexp_increment(step, next, out);
    }
    void level_weights(std::size_t level, std::span<double> out) const override {
        impl_.level_weights(level, out);
    }
    GridFunction accumulate(const GridFunction& dk) const override {
        return impl_.accumulate(dk);
    }

private:
    Lattice lattice_;
    LatticeBackend impl_;
};

class OwningRegressionBackend final : public CondExpBackend {
public:
    OwningRegressionBackend(PathEnsemble paths, GridFunction states, const TimeGrid& grid,
                            int degree, BasisTransform transform)
        : paths_(std::move(paths)),
          impl_(std::move(states), paths_, grid, degree, transform) {}

    EnsembleKind kind() const override { return impl_.kind(); }
    std::size_t n_steps() const override { return impl_.n_steps(); }
    std::size_t n_states(std::size_t level) const override { return impl_.n_states(level); }
    double state(std::size_t level, std::size_t idx) const override {
        return impl_.state(level, idx);
    }
    void condexp(std::size_t step, std::span<const double> next,
                 std::span<double> out) override {
        impl_.condexp(step, next, out);
    }
    void condexp_increment(std::size_t step, std::span<const double> next,
                           std::span<double> out) override {
        impl_.condexp_increment(step, next, out);
    }
    void level_weights(std::size_t level, std::span<double> out) const override {
        impl_.level_weights(level, out);
    }
    GridFunction accumulate(const GridFunction& dk) const override {
        return impl_.accumulate(dk);
    }

private:
    PathEnsemble paths_;
    RegressionBackend impl_;
};

}  // namespace

std::unique_ptr<CondExpBackend> make_lattice_backend(Lattice lattice) {
    return std::make_unique<OwningLatticeBackend>(std::move(lattice));
}

std::unique_ptr<CondExpBackend> make_regression_backend(PathEnsemble paths, GridFunction states,
                                                        const TimeGrid& grid, int degree,
                                                        BasisTransform transform) {
    return std::make_unique<OwningRegressionBackend>(std::move(paths), std::move(states), grid,
                                                     degree, transform);
}

}  // namespace drbsde
