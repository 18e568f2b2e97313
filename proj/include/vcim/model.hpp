#pragma once

#include <Eigen/Dense>

namespace vcim {

/**
 * Two-variance-component normal linear mixed model
 *
 *   y = X b + Z u + e,   u ~ N(0, sigma_a^2 A),   e ~ N(0, sigma_e^2 I).
 *
 * Only the design (y, X, Z, A) is stored; the variance components are the
 * unknowns downstream inference targets. A must be symmetric positive
 * semi-definite and X of full column rank with p < n.
 */
struct MixedModelSpec {
    Eigen::VectorXd y;  // response, length n
    Eigen::MatrixXd X;  // fixed-effect design, n x p
    Eigen::MatrixXd Z;  // random-effect design, n x a
    Eigen::MatrixXd A;  // random-effect covariance structure, a x a

    [[nodiscard]] Eigen::Index n() const { return y.size(); }
    [[nodiscard]] Eigen::Index p() const { return X.cols(); }
    [[nodiscard]] Eigen::Index a() const { return Z.cols(); }

    /// Throws DimensionError / RankDeficientError / NumericalError when the
    /// design violates the model requirements (n > p >= 1, rank(X) = p,
    /// A symmetric with eigenvalues >= -1e-10 * max|A|).
    void validate() const;
};

} // namespace vcim
