#include "vcim/model.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "vcim/errors.hpp"

namespace vcim {

void MixedModelSpec::validate() const {
    const Eigen::Index nn = n(), pp = p(), aa = a();
    if (pp < 1) {
        throw DimensionError("X must have at least one column");
    }
    if (nn <= pp) {
        throw DimensionError("need n > p (n = " + std::to_string(nn) +
                             ", p = " + std::to_string(pp) + ")");
    }
    if (X.rows() != nn) {
        throw DimensionError("X has " + std::to_string(X.rows()) +
                             " rows; y has " + std::to_string(nn));
    }
    if (Z.rows() != nn) {
        throw DimensionError("Z has " + std::to_string(Z.rows()) +
                             " rows; y has " + std::to_string(nn));
    }
    if (A.rows() != aa || A.cols() != aa) {
        throw DimensionError("A is " + std::to_string(A.rows()) + "x" +
                             std::to_string(A.cols()) + "; Z has " +
                             std::to_string(aa) + " columns");
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(X);
    const double smax = svd.singularValues()(0);
    const double thresh =
        static_cast<double>(nn) * std::numeric_limits<double>::epsilon() * smax;
    if (svd.singularValues()(pp - 1) <= thresh) {
        throw RankDeficientError("X is rank deficient (rank < p)");
    }

    const double a_scale = aa > 0 ? A.cwiseAbs().maxCoeff() : 0.0;
    const double tol_psd = 1e-10 * std::max(a_scale, 1.0);
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > tol_psd) {
        throw NumericalError("A is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        0.5 * (A + A.transpose()), Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -tol_psd) {
        throw NumericalError("A has a negative eigenvalue beyond tolerance");
    }
}

} // namespace vcim
