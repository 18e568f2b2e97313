#pragma once

#include <vector>

#include <Eigen/Dense>

#include "vcim/model.hpp"

namespace vcim {

/**
 * Eigenstructure of G = K' Z A Z' K together with the group projectors.
 *
 * lambdas holds the L distinct eigenvalues in strictly decreasing order
 * (last entry >= 0), mults their multiplicities (summing to n - p), and
 * projectors[l] the (n-p) x r_l orthonormal eigenvector block of group l.
 */
struct EigenStructure {
    Eigen::VectorXd lambdas;
    std::vector<int> mults;
    std::vector<Eigen::MatrixXd> projectors;
    Eigen::MatrixXd K;   // residual projector the projectors refer to

    [[nodiscard]] int L() const { return static_cast<int>(lambdas.size()); }
};

/**
 * Minimal sufficient reduction of the data for inference on the
 * heritability coefficient.
 *
 * S_l are the quadratic forms y' K P_l P_l' K' y, ratio_x the mean-square
 * ratios (S_l/r_l)/(S_L/r_L) for l < L, and t_stat their summed logs.
 */
struct EigenReduction {
    Eigen::VectorXd lambdas;   // L distinct eigenvalues, decreasing
    std::vector<int> mults;    // multiplicities r_1..r_L
    Eigen::VectorXd S;         // sufficient statistics S_1..S_L
    Eigen::VectorXd ratio_x;   // X_1..X_{L-1}
    double t_stat = 0.0;       // sum of log ratio_x

    [[nodiscard]] int L() const { return static_cast<int>(lambdas.size()); }
};

/// Returns an n x (n-p) matrix K with K'K = I and KK' = I - X(X'X)^{-1}X'.
/// Any orthonormal null-space basis of X' qualifies; downstream statistics
/// do not depend on the choice.
Eigen::MatrixXd build_residual_projector(const Eigen::MatrixXd& X);

/// Eigendecomposes G = K'ZAZ'K, clusters near-equal eigenvalues into
/// distinct groups and clamps tiny negatives to zero.
///
/// cluster_tol <= 0 selects the default 1e-8 * max(|lambda|, 1).
/// Throws DegenerateModelError when only one distinct eigenvalue remains.
EigenStructure eigen_reduce(const MixedModelSpec& model, double cluster_tol = -1.0);

/// S_l = || P_l' K' y ||^2 for each eigenvalue group.
Eigen::VectorXd sufficient_stats(const Eigen::VectorXd& y,
                                 const Eigen::MatrixXd& K,
                                 const std::vector<Eigen::MatrixXd>& projectors);

struct RatioStats {
    Eigen::VectorXd ratio_x;
    double t_stat = 0.0;
};

/// ratio_x_l = (S_l/r_l) / (S_L/r_L) for l < L and t_stat = sum log ratio_x.
/// The S_L coordinate itself is dropped; it carries only the error-variance
/// scale and cancels from every ratio.
RatioStats ratio_stats(const Eigen::VectorXd& S, const std::vector<int>& mults);

/// Full pipeline: model -> K -> eigenstructure -> S -> ratios.
EigenReduction reduce(const MixedModelSpec& model, double cluster_tol = -1.0);

/// Assembles an EigenReduction from a known eigenstructure and statistics
/// vector, bypassing the matrix pipeline (simulation and file-based entry).
EigenReduction reduction_from_stats(const Eigen::VectorXd& lambdas,
                                    const std::vector<int>& mults,
                                    const Eigen::VectorXd& S);

} // namespace vcim
