#pragma once

#include <cstddef>
#include <functional>

namespace drbsde::parallel {

/// Worker count for path-parallel loops. Results never depend on it: every
/// loop body writes a disjoint slot and all reductions run serially.
void set_threads(int n);
int threads();

/// Runs body(i) for i in [0, n). Splits into contiguous chunks when more
/// than one worker is configured.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace drbsde::parallel
