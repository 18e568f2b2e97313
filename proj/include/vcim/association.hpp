#pragma once

#include <Eigen/Dense>

#include "vcim/reduction.hpp"

namespace vcim {

/// Largest admissible localization point; the ratio functions diverge as
/// rho -> 1 when lambda_L = 0, so the parameter range is truncated there.
inline constexpr double kDefaultRhoMax = 1.0 - 1e-4;

/// f_l(rho) = (1 + rho(lambda_l - 1)) / (1 + rho(lambda_L - 1)), l < L.
Eigen::VectorXd f_values(double rho, const Eigen::VectorXd& lambdas,
                         double rho_max = kDefaultRhoMax);

/// phi(rho) = sum_l log f_l(rho).  phi(0) = 0 and phi is strictly
/// increasing whenever lambda_1 > lambda_L.
double phi(double rho, const Eigen::VectorXd& lambdas,
           double rho_max = kDefaultRhoMax);

/// g_l(rho) = d/drho log f_l(rho); entries are strictly positive on
/// [0, rho_max] because lambda_l > lambda_L for l < L.
Eigen::VectorXd g_vector(double rho, const Eigen::VectorXd& lambdas,
                         double rho_max = kDefaultRhoMax);

/// Orthonormal (L-2) x (L-1) matrix whose rows span the orthogonal
/// complement of g(rho).  Deterministic elementary-reflector construction;
/// empty (0 x 1) when L = 2.
Eigen::MatrixXd conditioning_matrix(double rho, const Eigen::VectorXd& lambdas,
                                    double rho_max = kDefaultRhoMax);

/// h = M (log x_l - log f_l), the observed value of the conditioning
/// statistic at the localization point.
Eigen::VectorXd conditioning_value(const Eigen::VectorXd& ratio_x,
                                   const Eigen::VectorXd& f,
                                   const Eigen::MatrixXd& M);

/**
 * All localization-dependent ingredients evaluated at a single rho:
 * the ratio functions f, their log-sum phi, the log-derivative vector g,
 * the conditioning matrix M (rows orthogonal to g) and the observed
 * conditioning value h.  Immutable once built.
 */
struct AssociationContext {
    double rho = 0.0;
    Eigen::VectorXd f;
    double phi = 0.0;
    Eigen::VectorXd g;
    Eigen::MatrixXd M;   // (L-2) x (L-1), orthonormal rows
    Eigen::VectorXd h;   // length L-2

    /// Builds the context at localization point rho for the given reduction.
    static AssociationContext at(double rho, const EigenReduction& red,
                                 double rho_max = kDefaultRhoMax);
};

} // namespace vcim
