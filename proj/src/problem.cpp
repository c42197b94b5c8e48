#include "drbsde/problem.hpp"

#include <cmath>
#include <utility>

#include "drbsde/rng.hpp"

namespace drbsde {

namespace {
std::function<double(double)> constant_curve(double v) {
    return [v](double) { return v; };
}
}  // namespace

Generator Generator::zero() {
    return {[](double, double, double) { return 0.0; }, constant_curve(0.0),
            constant_curve(0.0)};
}

Generator Generator::linear_in_y(double rate) {
    return {[rate](double, double y, double) { return -rate * y; },
            constant_curve(std::abs(rate)), constant_curve(0.0)};
}

Generator Generator::affine(double c0, double cy, double cz) {
    return {[c0, cy, cz](double, double y, double z) { return c0 + cy * y + cz * z; },
            constant_curve(std::abs(cy)), constant_curve(std::abs(cz))};
}

Generator Generator::discounting(std::function<double(double)> rate) {
    auto mu = [rate](double t) { return std::abs(rate(t)); };
    return {[rate = std::move(rate)](double t, double y, double) { return -rate(t) * y; },
            std::move(mu), constant_curve(0.0)};
}

double probe_generator_envelope(const Generator& gen, double horizon, std::size_t n_probes,
                                std::uint64_t seed, double range) {
    double worst = -1e300;
    for (std::size_t i = 0; i < n_probes; ++i) {
        const double t = horizon * rng::uniform01(rng::counter_key(seed, i, 0, 0));
        auto draw = [&](std::uint64_t c) {
            return range * (2.0 * rng::uniform01(rng::counter_key(seed, i, 1, c)) - 1.0);
        };
        const double y1 = draw(0), z1 = draw(1), y2 = draw(2), z2 = draw(3);
        const double lhs = std::abs(gen.f(t, y1, z1) - gen.f(t, y2, z2));
        const double rhs = gen.mu(t) * std::abs(y1 - y2) + gen.gamma(t) * std::abs(z1 - z2);
        worst = std::max(worst, lhs - rhs);
    }
    return worst;
}

}  // namespace drbsde
