#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace drbsde {

enum class BasisTransform { identity, log_state };

/// One-step least-squares fit of a target against a polynomial basis in the
/// (transformed, standardized) state. When the state column is numerically
/// constant the fit degenerates to the plain sample mean.
class PolynomialFit {
public:
    static PolynomialFit fit(std::span<const double> state, std::span<const double> target,
                             int degree, BasisTransform transform);

    double predict(double state) const;
    void predict_all(std::span<const double> state, std::span<double> out) const;

    /// |X^T (y - X c)| / (|X^T y| + tiny): normal-equation residual
    /// orthogonality of the fitted coefficients.
    double orthogonality_residual() const { return orthogonality_; }

    const std::vector<double>& coefficients() const { return coeffs_; }
    bool degenerate() const { return degenerate_; }

private:
    std::vector<double> coeffs_;  // in the standardized basis
    double center_ = 0.0;
    double scale_ = 1.0;
    double mean_ = 0.0;  // used when degenerate
    bool degenerate_ = false;
    BasisTransform transform_ = BasisTransform::identity;
    double orthogonality_ = 0.0;
};

}  // namespace drbsde
