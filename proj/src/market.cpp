#include "drbsde/market.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "drbsde/parallel.hpp"

namespace drbsde {

MarketCurves MarketCurves::constants(double r, double theta, double sigma, double s0) {
    return {[r](double) { return r; }, [theta](double) { return theta; },
            [sigma](double) { return sigma; }, s0};
}

MarketPaths MarketPaths::simulate(const MarketCurves& curves, const PathEnsemble& paths,
                                  const TimeGrid& grid) {
    if (!(curves.s0 > 0.0)) {
        throw std::invalid_argument("MarketPaths: spot must be positive");
    }
    if (paths.dim() != 1) {
        throw std::invalid_argument("MarketPaths: driving noise must be one-dimensional");
    }
    if (paths.n_steps() != grid.steps()) {
        throw std::invalid_argument("MarketPaths: path ensemble does not match the grid");
    }
    const std::size_t n_steps = grid.steps();
    const std::size_t n_paths = paths.n_paths();

    std::vector<double> drift(n_steps), vol(n_steps);
    for (std::size_t i = 0; i < n_steps; ++i) {
        const double t = grid.node(i);
        const double sig = curves.sigma(t);
        if (!(sig >= 0.0)) {
            throw std::invalid_argument("MarketPaths: sigma must be nonnegative at all nodes");
        }
        drift[i] = (curves.rate(t) + curves.risk_premium(t) * sig - 0.5 * sig * sig) * grid.dt(i);
        vol[i] = sig;
    }

    MarketPaths m;
    m.s0 = curves.s0;
    m.s = GridFunction::rectangular(n_steps + 1, n_paths);
    const double log_s0 = std::log(curves.s0);
    parallel::parallel_for(n_paths, [&](std::size_t p) {
        double log_s = log_s0;
        m.s.at(0, p) = curves.s0;
        for (std::size_t i = 0; i < n_steps; ++i) {
            log_s += drift[i] + vol[i] * paths.increment(i, p);
            m.s.at(i + 1, p) = std::exp(log_s);
        }
    });
    return m;
}

}  // namespace drbsde
