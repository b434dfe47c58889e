#pragma once

#include <array>
#include <span>

#include <Eigen/Dense>

#include "greenladder/error.hpp"
#include "greenladder/ml/features.hpp"

namespace greenladder::ml {

/// y = intercept + coef . x, on whatever feature space it was fitted in.
struct LinearModel {
    FeatureRow coef{0.0, 0.0, 0.0};
    double intercept = 0;

    double predict(const FeatureRow& x) const {
        double s = intercept;
        for (std::size_t f = 0; f < kNumFeatures; ++f) s += coef[f] * x[f];
        return s;
    }

    /// Maps a model fitted on scaled features back to raw feature units.
    LinearModel unscaled(const Scaler& scaler) const {
        LinearModel raw;
        raw.intercept = intercept;
        for (std::size_t f = 0; f < kNumFeatures; ++f) {
            raw.coef[f] = coef[f] / scaler.sd[f];
            raw.intercept -= coef[f] * scaler.mean[f] / scaler.sd[f];
        }
        return raw;
    }

    double coef_norm() const {
        double s = 0;
        for (double c : coef) s += c * c;
        return std::sqrt(s);
    }
};

namespace detail {

inline Eigen::MatrixXd design_matrix(std::span<const FeatureRow> X) {
    Eigen::MatrixXd Z(static_cast<Eigen::Index>(X.size()), static_cast<Eigen::Index>(kNumFeatures + 1));
    for (std::size_t i = 0; i < X.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        Z(r, 0) = 1.0;
        for (std::size_t f = 0; f < kNumFeatures; ++f) Z(r, static_cast<Eigen::Index>(f + 1)) = X[i][f];
    }
    return Z;
}

inline void check_fit_input(std::span<const FeatureRow> X, std::span<const double> y) {
    if (y.empty()) throw Error(ErrorCode::DegenerateDesignMatrix, "no targets");
    if (X.size() != y.size()) throw Error(ErrorCode::InvalidArgument, "X and y differ in length");
    require_finite(X);
    require_finite(y);
}

} // namespace detail

/// Ordinary least squares with intercept. Solves the normal equations when
/// Z'Z has full rank, otherwise returns the minimum-norm pseudo-inverse solution.
inline LinearModel fit_ols(std::span<const FeatureRow> X, std::span<const double> y) {
    detail::check_fit_input(X, y);
    const Eigen::MatrixXd Z = detail::design_matrix(X);
    const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
    const Eigen::MatrixXd A = Z.transpose() * Z;
    const Eigen::VectorXd b = Z.transpose() * yv;

    Eigen::VectorXd beta;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
    if (cod.rank() == A.rows()) {
        beta = A.ldlt().solve(b);
    } else {
        beta = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(Z).solve(yv);
    }

    LinearModel m;
    m.intercept = beta(0);
    for (std::size_t f = 0; f < kNumFeatures; ++f) m.coef[f] = beta(static_cast<Eigen::Index>(f + 1));
    return m;
}

/// Ridge regression, intercept unpenalized: features and target are centred,
/// coef = (Xc'Xc + alpha I)^-1 Xc'yc, intercept = mean(y) - coef . mean(x).
inline LinearModel fit_ridge(std::span<const FeatureRow> X, std::span<const double> y, double alpha) {
    detail::check_fit_input(X, y);
    if (!(alpha >= 0)) throw Error(ErrorCode::InvalidArgument, "alpha must be non-negative");
    const auto n = static_cast<Eigen::Index>(X.size());
    const auto p = static_cast<Eigen::Index>(kNumFeatures);

    Eigen::MatrixXd Xc(n, p);
    Eigen::VectorXd yc(n);
    Eigen::VectorXd xm = Eigen::VectorXd::Zero(p);
    double ym = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index f = 0; f < p; ++f) xm(f) += X[static_cast<std::size_t>(i)][static_cast<std::size_t>(f)];
        ym += y[static_cast<std::size_t>(i)];
    }
    xm /= static_cast<double>(n);
    ym /= static_cast<double>(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index f = 0; f < p; ++f) {
            Xc(i, f) = X[static_cast<std::size_t>(i)][static_cast<std::size_t>(f)] - xm(f);
        }
        yc(i) = y[static_cast<std::size_t>(i)] - ym;
    }

    Eigen::MatrixXd A = Xc.transpose() * Xc;
    A.diagonal().array() += alpha;
    const Eigen::VectorXd b = Xc.transpose() * yc;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
    const Eigen::VectorXd w = cod.rank() == p ? Eigen::VectorXd(A.ldlt().solve(b)) : Eigen::VectorXd(cod.solve(b));

    LinearModel m;
    m.intercept = ym;
    for (Eigen::Index f = 0; f < p; ++f) {
        m.coef[static_cast<std::size_t>(f)] = w(f);
        m.intercept -= w(f) * xm(f);
    }
    return m;
}

} // namespace greenladder::ml
