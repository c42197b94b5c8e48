#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>

namespace drbsde {

/// Driver f(t, y, z) together with its declared Lipschitz envelope:
/// |f(t,y,z) - f(t,y',z')| <= mu(t)|y-y'| + gamma(t)|z-z'|.
struct Generator {
    std::function<double(double t, double y, double z)> f;
    std::function<double(double t)> mu;
    std::function<double(double t)> gamma;

    static Generator zero();
    /// f(t,y,z) = -rate * y.
    static Generator linear_in_y(double rate);
    /// f(t,y,z) = c0 + cy*y + cz*z.
    static Generator affine(double c0, double cy, double cz);
    /// f(t,y,z) = -r(t) * y with a time-dependent rate curve.
    static Generator discounting(std::function<double(double)> rate);
};

/// Barrier or payoff surface evaluated at (t, state).
using SurfaceFn = std::function<double(double t, double s)>;

/// The data tuple (terminal condition, generator, optional barriers). An
/// absent barrier stands for -infinity (lower) or +infinity (upper).
struct ProblemData {
    std::function<double(double s)> terminal;
    Generator generator;
    std::optional<SurfaceFn> lower;
    std::optional<SurfaceFn> upper;

    bool has_lower() const { return lower.has_value(); }
    bool has_upper() const { return upper.has_value(); }
};

/// Randomized check of the declared envelope on probe pairs drawn from
/// [0,T] x [-range,range]^4. Returns the worst excess of
/// |f(t,y,z)-f(t,y',z')| over mu(t)|y-y'| + gamma(t)|z-z'|.
double probe_generator_envelope(const Generator& gen, double horizon, std::size_t n_probes,
                                std::uint64_t seed, double range = 10.0);

}  // namespace drbsde
