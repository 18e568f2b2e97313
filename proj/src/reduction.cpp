#include "vcim/reduction.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "vcim/errors.hpp"

namespace vcim {

Eigen::MatrixXd build_residual_projector(const Eigen::MatrixXd& X) {
    const Eigen::Index n = X.rows(), p = X.cols();
    if (p < 1) {
        throw DimensionError("X must have at least one column");
    }
    if (p >= n) {
        throw DimensionError("need p < n (p = " + std::to_string(p) +
                             ", n = " + std::to_string(n) + ")");
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(X);
    const double smax = svd.singularValues()(0);
    const double thresh =
        static_cast<double>(n) * std::numeric_limits<double>::epsilon() * smax;
    if (smax == 0.0 || svd.singularValues()(p - 1) <= thresh) {
        throw RankDeficientError("X is rank deficient (rank < p)");
    }

    // Full QR of X: the trailing n-p columns of Q span the null space of X'.
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(X);
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    return Q.rightCols(n - p);
}

EigenStructure eigen_reduce(const MixedModelSpec& model, double cluster_tol) {
    model.validate();

    const Eigen::MatrixXd K = build_residual_projector(model.X);
    const Eigen::MatrixXd KtZ = K.transpose() * model.Z;
    Eigen::MatrixXd G = KtZ * model.A * KtZ.transpose();
    G = 0.5 * (G + G.transpose());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    if (es.info() != Eigen::Success) {
        throw NumericalError("eigendecomposition of G failed");
    }

    const Eigen::Index m = G.rows();
    // Eigen returns ascending order; flip to descending.
    Eigen::VectorXd vals(m);
    Eigen::MatrixXd vecs(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        vals(i) = es.eigenvalues()(m - 1 - i);
        vecs.col(i) = es.eigenvectors().col(m - 1 - i);
    }

    const double scale = std::max(vals.cwiseAbs().maxCoeff(), 0.0);
    const double tol = cluster_tol > 0.0 ? cluster_tol : 1e-8 * std::max(scale, 1e-300);

    if (vals(m - 1) < -tol) {
        throw NumericalError("G has a negative eigenvalue beyond tolerance");
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        if (vals(i) < 0.0) vals(i) = 0.0;
    }

    // Group eigenvalues whose consecutive gaps are within tolerance.
    std::vector<std::pair<Eigen::Index, Eigen::Index>> groups; // [first, last]
    Eigen::Index start = 0;
    for (Eigen::Index i = 1; i <= m; ++i) {
        if (i == m || vals(i - 1) - vals(i) > tol) {
            groups.emplace_back(start, i - 1);
            start = i;
        }
    }

    const int L = static_cast<int>(groups.size());
    if (L < 2) {
        throw DegenerateModelError(
            "G has a single distinct eigenvalue; the variance ratio is "
            "unidentifiable");
    }

    EigenStructure out;
    out.lambdas.resize(L);
    out.mults.resize(L);
    out.projectors.reserve(L);
    out.K = K;
    for (int l = 0; l < L; ++l) {
        const auto [first, last] = groups[l];
        const Eigen::Index r = last - first + 1;
        double rep = vals.segment(first, r).mean();
        if (std::abs(rep) <= tol) rep = 0.0;
        out.lambdas(l) = rep;
        out.mults[l] = static_cast<int>(r);
        out.projectors.push_back(vecs.middleCols(first, r));
    }
    return out;
}

Eigen::VectorXd sufficient_stats(const Eigen::VectorXd& y,
                                 const Eigen::MatrixXd& K,
                                 const std::vector<Eigen::MatrixXd>& projectors) {
    if (K.rows() != y.size()) {
        throw DimensionError("K has " + std::to_string(K.rows()) +
                             " rows; y has " + std::to_string(y.size()));
    }
    const Eigen::VectorXd Kty = K.transpose() * y;
    const double residual = Kty.squaredNorm();

    const double eps = std::numeric_limits<double>::epsilon();
    const double degenerate =
        std::pow(static_cast<double>(y.size()) * eps * y.norm(), 2);
    if (residual <= degenerate) {
        throw NumericalError(
            "y has no residual variation (it lies in the column space of X)");
    }

    const int L = static_cast<int>(projectors.size());
    Eigen::VectorXd S(L);
    for (int l = 0; l < L; ++l) {
        S(l) = (projectors[l].transpose() * Kty).squaredNorm();
    }

    const double total = S.sum();
    if (S.minCoeff() < -1e-12 * total) {
        throw NumericalError("negative sufficient statistic (projector defect)");
    }
    if (std::abs(total - residual) > 1e-8 * residual) {
        throw NumericalError("projectors do not resolve the residual space");
    }
    return S;
}

RatioStats ratio_stats(const Eigen::VectorXd& S, const std::vector<int>& mults) {
    const int L = static_cast<int>(mults.size());
    if (L < 2 || S.size() != L) {
        throw DimensionError("need L >= 2 strata with matching S");
    }
    if (S(L - 1) == 0.0) {
        throw DivisionByZeroError("S_L is zero; mean-square ratios undefined");
    }

    const double denom = S(L - 1) / static_cast<double>(mults[L - 1]);
    RatioStats out;
    out.ratio_x.resize(L - 1);
    out.t_stat = 0.0;
    for (int l = 0; l < L - 1; ++l) {
        const double x = (S(l) / static_cast<double>(mults[l])) / denom;
        if (!(x > 0.0)) {
            throw NumericalError("nonpositive ratio statistic in stratum " +
                                 std::to_string(l + 1));
        }
        out.ratio_x(l) = x;
        out.t_stat += std::log(x);
    }
    return out;
}

EigenReduction reduce(const MixedModelSpec& model, double cluster_tol) {
    const EigenStructure st = eigen_reduce(model, cluster_tol);
    const Eigen::VectorXd S = sufficient_stats(model.y, st.K, st.projectors);
    return reduction_from_stats(st.lambdas, st.mults, S);
}

EigenReduction reduction_from_stats(const Eigen::VectorXd& lambdas,
                                    const std::vector<int>& mults,
                                    const Eigen::VectorXd& S) {
    const int L = static_cast<int>(lambdas.size());
    if (L < 2) {
        throw DegenerateModelError("need at least two distinct eigenvalues");
    }
    if (static_cast<int>(mults.size()) != L || S.size() != L) {
        throw DimensionError("lambdas, mults and S must have equal length");
    }
    for (int l = 0; l + 1 < L; ++l) {
        if (!(lambdas(l) > lambdas(l + 1))) {
            throw OrderError("eigenvalues must be strictly decreasing");
        }
    }
    if (lambdas(L - 1) < 0.0) {
        throw OrderError("smallest eigenvalue must be >= 0");
    }
    for (int r : mults) {
        if (r < 1) throw DimensionError("multiplicities must be positive");
    }

    EigenReduction red;
    red.lambdas = lambdas;
    red.mults = mults;
    red.S = S;
    auto rs = ratio_stats(S, mults);
    red.ratio_x = std::move(rs.ratio_x);
    red.t_stat = rs.t_stat;
    return red;
}

} // namespace vcim
