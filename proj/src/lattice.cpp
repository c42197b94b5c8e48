#include "drbsde/lattice.hpp"

#include <cmath>
#include <stdexcept>

namespace drbsde {

Lattice Lattice::build(const MarketCurves& curves, const TimeGrid& grid) {
    if (!(curves.s0 > 0.0)) {
        throw std::invalid_argument("Lattice: spot must be positive");
    }
    if (!grid.is_uniform()) {
        throw std::invalid_argument("Lattice: requires a uniform grid");
    }
    const std::size_t n = grid.steps();
    const double dt = grid.dt(0);

    double sigma_bar = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double sig = curves.sigma(grid.node(i));
        if (!(sig > 0.0)) {
            throw std::invalid_argument("Lattice: sigma must be positive at all nodes");
        }
        sigma_bar += sig;
    }
    sigma_bar /= static_cast<double>(n);

    const double up = std::exp(sigma_bar * std::sqrt(dt));
    const double down = 1.0 / up;
    std::vector<double> prob(n), dts(n, dt);
    for (std::size_t i = 0; i < n; ++i) {
        const double growth = std::exp(curves.rate(grid.node(i)) * dt);
        prob[i] = (growth - down) / (up - down);
        if (prob[i] < 0.0 || prob[i] > 1.0) {
            throw std::invalid_argument(
                "Lattice: risk-neutral probability outside [0,1]; refine the grid or "
                "raise sigma");
        }
    }
    return Lattice(curves.s0, up, down, std::move(prob), std::move(dts));
}

Lattice::Lattice(double s0, double up, double down, std::vector<double> prob_up,
                 std::vector<double> dt)
    : s0_(s0), up_(up), down_(down), prob_up_(std::move(prob_up)), dt_(std::move(dt)) {
    if (prob_up_.empty() || prob_up_.size() != dt_.size()) {
        throw std::invalid_argument("Lattice: need one probability and step size per step");
    }
    if (!(up_ > down_)) {
        throw std::invalid_argument("Lattice: up multiplier must exceed down");
    }
    for (double p : prob_up_) {
        if (p < 0.0 || p > 1.0) {
            throw std::invalid_argument("Lattice: probabilities must lie in [0,1]");
        }
    }
    fill_level_probabilities();
}

double Lattice::node_value(std::size_t level, std::size_t j) const {
    return s0_ * std::pow(up_, static_cast<double>(j)) *
           std::pow(down_, static_cast<double>(level - j));
}

void Lattice::condexp(std::size_t step, std::span<const double> next,
                      std::span<double> out) const {
    const double p = prob_up_[step];
    for (std::size_t j = 0; j < out.size(); ++j) {
        out[j] = p * next[j + 1] + (1.0 - p) * next[j];
    }
}

void Lattice::condexp_increment(std::size_t step, std::span<const double> next,
                                std::span<double> out) const {
    const double p = prob_up_[step];
    const double scale = std::sqrt(p * (1.0 - p) / dt_[step]);
    for (std::size_t j = 0; j < out.size(); ++j) {
        out[j] = scale * (next[j + 1] - next[j]);
    }
}

void Lattice::fill_level_probabilities() {
    const std::size_t n = n_steps();
    level_prob_.resize(n + 1);
    level_prob_[0] = {1.0};
    for (std::size_t i = 0; i < n; ++i) {
        const double p = prob_up_[i];
        auto& cur = level_prob_[i];
        auto& nxt = level_prob_[i + 1];
        nxt.assign(i + 2, 0.0);
        for (std::size_t j = 0; j <= i; ++j) {
            nxt[j] += cur[j] * (1.0 - p);
            nxt[j + 1] += cur[j] * p;
        }
    }
}

}  // namespace drbsde
