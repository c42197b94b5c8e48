#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace testsupport {

namespace {

double step_discount(double rate, double dt, Discount disc) {
    return disc == Discount::exponential ? std::exp(-rate * dt) : 1.0 / (1.0 + rate * dt);
}

}  // namespace

double american_put_tree(double s0, double strike, double rate, double sigma, double horizon,
                         std::size_t steps, Discount disc) {
    const double dt = horizon / static_cast<double>(steps);
    const double up = std::exp(sigma * std::sqrt(dt));
    const double down = 1.0 / up;
    const double p = (std::exp(rate * dt) - down) / (up - down);
    const double df = step_discount(rate, dt, disc);

    std::vector<double> values(steps + 1);
    for (std::size_t j = 0; j <= steps; ++j) {
        const double s = s0 * std::pow(up, static_cast<double>(j)) *
                         std::pow(down, static_cast<double>(steps - j));
        values[j] = std::max(strike - s, 0.0);
    }
    for (std::size_t i = steps; i-- > 0;) {
        for (std::size_t j = 0; j <= i; ++j) {
            const double cont = df * (p * values[j + 1] + (1.0 - p) * values[j]);
            const double s = s0 * std::pow(up, static_cast<double>(j)) *
                             std::pow(down, static_cast<double>(i - j));
            values[j] = std::max(cont, std::max(strike - s, 0.0));
        }
    }
    return values[0];
}

double european_tree_value(const std::function<double(double)>& payoff, double s0, double rate,
                           double sigma, double horizon, std::size_t steps, Discount disc) {
    const double dt = horizon / static_cast<double>(steps);
    const double up = std::exp(sigma * std::sqrt(dt));
    const double down = 1.0 / up;
    const double p = (std::exp(rate * dt) - down) / (up - down);
    const double df = step_discount(rate, dt, disc);

    std::vector<double> values(steps + 1);
    for (std::size_t j = 0; j <= steps; ++j) {
        values[j] = payoff(s0 * std::pow(up, static_cast<double>(j)) *
                           std::pow(down, static_cast<double>(steps - j)));
    }
    for (std::size_t i = steps; i-- > 0;) {
        for (std::size_t j = 0; j <= i; ++j) {
            values[j] = df * (p * values[j + 1] + (1.0 - p) * values[j]);
        }
    }
    return values[0];
}

SaddleValue dynkin_brute_force(const drbsde::GameSpec& spec, const drbsde::Lattice& lattice,
                               const drbsde::TimeGrid& grid) {
    const std::size_t n = grid.steps();
    const std::size_t n_interior = n * (n + 1) / 2;
    if (n_interior > 16) {
        throw std::invalid_argument("dynkin_brute_force: tree too large to enumerate");
    }
    const std::size_t n_masks = std::size_t{1} << n_interior;

    auto interior_index = [](std::size_t level, std::size_t j) {
        return level * (level + 1) / 2 + j;
    };

    // Root payoff for a fixed pair of first-entry stopping sets. The holder
    // stops for L, the issuer for U; a tie pays L.
    auto value_for = [&](std::size_t mask_tau, std::size_t mask_nu) {
        std::vector<double> values(n + 1);
        for (std::size_t j = 0; j <= n; ++j) {
            values[j] = spec.terminal(lattice.node_value(n, j));
        }
        for (std::size_t i = n; i-- > 0;) {
            const double t = grid.node(i);
            const double disc = 1.0 / (1.0 + spec.market.rate(t) * grid.dt(i));
            const double p = lattice.prob_up(i);
            for (std::size_t j = 0; j <= i; ++j) {
                const double s = lattice.node_value(i, j);
                const bool tau_stops = (mask_tau >> interior_index(i, j)) & 1U;
                const bool nu_stops = (mask_nu >> interior_index(i, j)) & 1U;
                double v;
                if (tau_stops) {
                    v = (*spec.lower_payoff)(t, s);
                } else if (nu_stops) {
                    v = (*spec.upper_payoff)(t, s);
                } else {
                    v = disc * (p * values[j + 1] + (1.0 - p) * values[j]);
                }
                values[j] = v;
            }
        }
        return values[0];
    };

    SaddleValue out;
    out.sup_inf = -1e300;
    for (std::size_t mt = 0; mt < n_masks; ++mt) {
        double worst = 1e300;
        for (std::size_t mn = 0; mn < n_masks; ++mn) {
            worst = std::min(worst, value_for(mt, mn));
        }
        out.sup_inf = std::max(out.sup_inf, worst);
    }
    out.inf_sup = 1e300;
    for (std::size_t mn = 0; mn < n_masks; ++mn) {
        double best = -1e300;
        for (std::size_t mt = 0; mt < n_masks; ++mt) {
            best = std::max(best, value_for(mt, mn));
        }
        out.inf_sup = std::min(out.inf_sup, best);
    }
    return out;
}

}  // namespace testsupport
