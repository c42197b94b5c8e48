#pragma once

#include <cstdint>

namespace drbsde::rng {

/// SplitMix64 finalizer; statistically strong 64-bit mixing.
std::uint64_t splitmix64(std::uint64_t x);

/// Stateless key for the (seed, path, step, component) counter.
std::uint64_t counter_key(std::uint64_t seed, std::uint64_t path, std::uint64_t step,
                          std::uint64_t component);

/// Uniform draw in (0, 1) from a 64-bit key.
double uniform01(std::uint64_t key);

/// Inverse standard normal CDF (Acklam rational approximation plus one
/// Halley refinement; accurate to ~1e-15 on (0,1)).
double inverse_normal_cdf(double p);

/// Standard normal draw addressed by counter, independent of evaluation
/// order and thread count.
double normal(std::uint64_t seed, std::uint64_t path, std::uint64_t step,
              std::uint64_t component);

}  // namespace drbsde::rng
