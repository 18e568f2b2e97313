#pragma once

// Helpers shared by the unit and acceptance suites.

#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "vcim/reduction.hpp"
#include "vcim/rng.hpp"

namespace testsupport {

inline Eigen::MatrixXd random_orthogonal(int n, vcim::Rng& rng) {
    Eigen::MatrixXd noise(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) noise(i, j) = rng.normal();
    }
    return Eigen::HouseholderQR<Eigen::MatrixXd>(noise).householderQ();
}

// Full reduction computed with a rotated residual projector K Q.  Every
// step is done with explicit dense algebra so this is an independent route
// to the same statistics, exercising the K-invariance contract.
inline vcim::EigenReduction reduce_with_rotated_k(const vcim::MixedModelSpec& model,
                                                  vcim::Rng& rng) {
    const Eigen::MatrixXd K0 = vcim::build_residual_projector(model.X);
    const int m = static_cast<int>(K0.cols());
    const Eigen::MatrixXd K = K0 * random_orthogonal(m, rng);

    Eigen::MatrixXd G =
        K.transpose() * model.Z * model.A * model.Z.transpose() * K;
    G = 0.5 * (G + G.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);

    Eigen::VectorXd vals(m);
    Eigen::MatrixXd vecs(m, m);
    for (int i = 0; i < m; ++i) {
        vals(i) = std::max(es.eigenvalues()(m - 1 - i), 0.0);
        vecs.col(i) = es.eigenvectors().col(m - 1 - i);
    }

    const double tol = 1e-8 * std::max(vals.maxCoeff(), 1e-300);
    std::vector<double> lambdas;
    std::vector<int> mults;
    std::vector<double> S;
    const Eigen::VectorXd Kty = K.transpose() * model.y;
    int start = 0;
    for (int i = 1; i <= m; ++i) {
        if (i == m || vals(i - 1) - vals(i) > tol) {
            const int r = i - start;
            double rep = vals.segment(start, r).mean();
            if (std::abs(rep) <= tol) rep = 0.0;
            lambdas.push_back(rep);
            mults.push_back(r);
            S.push_back((vecs.middleCols(start, r).transpose() * Kty).squaredNorm());
            start = i;
        }
    }

    Eigen::VectorXd lv = Eigen::Map<Eigen::VectorXd>(
        lambdas.data(), static_cast<Eigen::Index>(lambdas.size()));
    Eigen::VectorXd Sv = Eigen::Map<Eigen::VectorXd>(
        S.data(), static_cast<Eigen::Index>(S.size()));
    return vcim::reduction_from_stats(lv, mults, Sv);
}

// L = 18 stress eigenstructure: top value 5.09, an interior multiplicity-2
// value at 2, a 37-fold zero stratum, the rest distinct singletons.
inline std::pair<Eigen::VectorXd, std::vector<int>> lamb_structure() {
    std::vector<double> lams;
    for (int i = 1; i <= 7; ++i) {
        lams.push_back(5.09 - (i - 1) * (5.09 - 2.0) / 7.0);
    }
    lams.push_back(2.0);
    for (int k = 1; k <= 9; ++k) lams.push_back(2.0 - 0.2 * k);
    lams.push_back(0.0);

    std::vector<int> mults(18, 1);
    mults[7] = 2;
    mults[17] = 37;

    Eigen::VectorXd lv = Eigen::Map<Eigen::VectorXd>(
        lams.data(), static_cast<Eigen::Index>(lams.size()));
    return {lv, mults};
}

} // namespace testsupport
