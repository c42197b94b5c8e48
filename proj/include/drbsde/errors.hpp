#pragma once

#include <stdexcept>
#include <string>

namespace drbsde {

/// Thrown when an explicit backward step would be contractive no more:
/// the generator's Lipschitz rate times the step size reaches 1.
class StepSizeError : public std::runtime_error {
public:
    explicit StepSizeError(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown when a lower barrier exceeds the upper one at some node.
class InconsistentBarriersError : public std::runtime_error {
public:
    explicit InconsistentBarriersError(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown when a least-squares fit has fewer samples than basis functions.
class UnderdeterminedRegressionError : public std::runtime_error {
public:
    explicit UnderdeterminedRegressionError(const std::string& what)
        : std::runtime_error(what) {}
};

/// Thrown when a solution bundle contradicts the problem it claims to solve
/// (e.g. reflection bookkeeping without the matching barrier).
class InconsistencyError : public std::runtime_error {
public:
    explicit InconsistencyError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace drbsde
