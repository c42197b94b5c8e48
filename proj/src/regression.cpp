#include "drbsde/regression.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "drbsde/errors.hpp"

namespace drbsde {

namespace {
double transformed(double s, BasisTransform t) {
    return t == BasisTransform::log_state ? std::log(s) : s;
}
}  // namespace

PolynomialFit PolynomialFit::fit(std::span<const double> state, std::span<const double> target,
                                 int degree, BasisTransform transform) {
    if (degree < 0) {
        throw std::invalid_argument("PolynomialFit: degree must be nonnegative");
    }
    const std::size_t n = state.size();
    const std::size_t k = static_cast<std::size_t>(degree) + 1;
    if (target.size() != n) {
        throw std::invalid_argument("PolynomialFit: state and target sizes differ");
    }
    if (n < k) {
        throw UnderdeterminedRegressionError(
            "PolynomialFit: fewer samples than basis functions");
    }

    PolynomialFit f;
    f.transform_ = transform;

    double mean_x = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_x += transformed(state[i], transform);
        mean_y += target[i];
    }
    mean_x /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);
    double var_x = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = transformed(state[i], transform) - mean_x;
        var_x += d * d;
    }
    var_x /= static_cast<double>(n);
    const double sd_x = std::sqrt(var_x);

    f.mean_ = mean_y;
    if (degree == 0 || sd_x < 1e-12 * (1.0 + std::abs(mean_x))) {
        f.degenerate_ = true;
        f.coeffs_ = {mean_y};
        f.orthogonality_ = 0.0;
        return f;
    }
    f.center_ = mean_x;
    f.scale_ = sd_x;

    Eigen::MatrixXd design(n, k);
    Eigen::VectorXd rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = (transformed(state[i], transform) - f.center_) / f.scale_;
        double pw = 1.0;
        for (std::size_t c = 0; c < k; ++c) {
            design(i, c) = pw;
            pw *= x;
        }
        rhs(i) = target[i];
    }

    const Eigen::VectorXd coeffs = design.colPivHouseholderQr().solve(rhs);
    f.coeffs_.assign(coeffs.data(), coeffs.data() + k);

    const Eigen::VectorXd grad = design.transpose() * (rhs - design * coeffs);
    const double ref = (design.transpose() * rhs).norm() + 1e-300;
    f.orthogonality_ = grad.norm() / ref;
    return f;
}

double PolynomialFit::predict(double state) const {
    if (degenerate_) return mean_;
    const double x = (transformed(state, transform_) - center_) / scale_;
    double acc = 0.0;
    for (std::size_t c = coeffs_.size(); c-- > 0;) acc = acc * x + coeffs_[c];
    return acc;
}

void PolynomialFit::predict_all(std::span<const double> state, std::span<double> out) const {
    for (std::size_t i = 0; i < state.size(); ++i) out[i] = predict(state[i]);
}

}  // namespace drbsde
