#include "vcim/association.hpp"

#include <cmath>
#include <string>

#include "vcim/errors.hpp"

namespace vcim {

namespace {

void check_rho(double rho, double rho_max) {
    if (!(rho_max > 0.0 && rho_max < 1.0)) {
        throw DomainError("rho_max must lie in (0, 1)");
    }
    if (!(rho >= 0.0 && rho <= rho_max)) {
        throw DomainError("rho = " + std::to_string(rho) +
                          " outside [0, " + std::to_string(rho_max) + "]");
    }
}

void check_lambdas(const Eigen::VectorXd& lambdas) {
    if (lambdas.size() < 2) {
        throw DimensionError("need at least two distinct eigenvalues");
    }
}

} // namespace

Eigen::VectorXd f_values(double rho, const Eigen::VectorXd& lambdas,
                         double rho_max) {
    check_rho(rho, rho_max);
    check_lambdas(lambdas);
    const int L = static_cast<int>(lambdas.size());
    const double denom = 1.0 + rho * (lambdas(L - 1) - 1.0);
    if (!(denom > 0.0)) {
        throw NumericalError("nonpositive denominator in f at rho = " +
                             std::to_string(rho));
    }
    Eigen::VectorXd f(L - 1);
    for (int l = 0; l < L - 1; ++l) {
        f(l) = (1.0 + rho * (lambdas(l) - 1.0)) / denom;
    }
    return f;
}

double phi(double rho, const Eigen::VectorXd& lambdas, double rho_max) {
    const Eigen::VectorXd f = f_values(rho, lambdas, rho_max);
    double sum = 0.0;
    for (Eigen::Index l = 0; l < f.size(); ++l) sum += std::log(f(l));
    return sum;
}

Eigen::VectorXd g_vector(double rho, const Eigen::VectorXd& lambdas,
                         double rho_max) {
    check_rho(rho, rho_max);
    check_lambdas(lambdas);
    const int L = static_cast<int>(lambdas.size());
    const double dL = 1.0 + rho * (lambdas(L - 1) - 1.0);
    const double tail = (lambdas(L - 1) - 1.0) / dL;
    Eigen::VectorXd g(L - 1);
    for (int l = 0; l < L - 1; ++l) {
        const double dl = 1.0 + rho * (lambdas(l) - 1.0);
        g(l) = (lambdas(l) - 1.0) / dl - tail;
        if (!(g(l) > 0.0)) {
            throw NumericalError("g_" + std::to_string(l + 1) +
                                 "(rho) is not strictly positive");
        }
    }
    return g;
}

Eigen::MatrixXd conditioning_matrix(double rho, const Eigen::VectorXd& lambdas,
                                    double rho_max) {
    const Eigen::VectorXd g = g_vector(rho, lambdas, rho_max);
    const int m = static_cast<int>(g.size());
    if (m == 1) {
        return Eigen::MatrixXd(0, 1);
    }

    // Elementary reflector sending g/|g| to -sign(g_1) e_1.  Rows 2..m of
    // the (symmetric, orthogonal) reflector are then an orthonormal basis
    // of the complement of g; the construction is deterministic.
    Eigen::VectorXd w = g.normalized();
    w(0) += (w(0) >= 0.0 ? 1.0 : -1.0);
    const double wtw = w.squaredNorm();
    Eigen::MatrixXd H =
        Eigen::MatrixXd::Identity(m, m) - (2.0 / wtw) * (w * w.transpose());
    return H.bottomRows(m - 1);
}

Eigen::VectorXd conditioning_value(const Eigen::VectorXd& ratio_x,
                                   const Eigen::VectorXd& f,
                                   const Eigen::MatrixXd& M) {
    if (ratio_x.size() != f.size() || M.cols() != ratio_x.size()) {
        throw DimensionError("ratio_x, f and M dimensions disagree");
    }
    Eigen::VectorXd logs(ratio_x.size());
    for (Eigen::Index l = 0; l < ratio_x.size(); ++l) {
        if (!(ratio_x(l) > 0.0)) {
            throw DomainError("ratio statistic must be positive");
        }
        logs(l) = std::log(ratio_x(l)) - std::log(f(l));
    }
    return M * logs;
}

AssociationContext AssociationContext::at(double rho, const EigenReduction& red,
                                          double rho_max) {
    AssociationContext ctx;
    ctx.rho = rho;
    ctx.f = f_values(rho, red.lambdas, rho_max);
    ctx.phi = 0.0;
    for (Eigen::Index l = 0; l < ctx.f.size(); ++l) ctx.phi += std::log(ctx.f(l));
    ctx.g = g_vector(rho, red.lambdas, rho_max);
    ctx.M = conditioning_matrix(rho, red.lambdas, rho_max);
    ctx.h = conditioning_value(red.ratio_x, ctx.f, ctx.M);
    return ctx;
}

} // namespace vcim
