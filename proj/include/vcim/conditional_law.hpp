#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "vcim/association.hpp"

namespace vcim {

/// Unnormalized log-density of the common-denominator chi-square ratio
/// vector U at u > 0 (componentwise), up to an additive constant:
///
///   sum_{l<L} (r_l/2 - 1) log u_l - (nu/2) log(1 + sum_{l<L} (r_l/r_L) u_l),
///
/// with nu = sum_l r_l.  Validated against the chi-square construction by
/// the Monte Carlo marginal tests before anything downstream trusts it.
double log_density_u(const Eigen::VectorXd& u, const std::vector<int>& mults);

/// Inverts the log-linear split (1'w, M w) = (v, h) for w = log u.
/// The stack [1'; M] is nonsingular because 1 is never orthogonal to g.
Eigen::VectorXd solve_w(double v, const Eigen::VectorXd& h,
                        const Eigen::MatrixXd& M);

/// Unnormalized conditional log-density of V = sum log U_l at v, given the
/// conditioning value h held in ctx.  Equals log_density_u(exp(w)) + 1'w
/// with w = solve_w(v, h, M); evaluated in w-space so it stays finite for
/// every real v.
double log_q(double v, const AssociationContext& ctx,
             const std::vector<int>& mults);

struct LawOptions {
    double quad_tol = 1e-9;          // relative integration tolerance
    int min_knots = 512;             // minimum number of CDF grid knots
    double tail_drop = 40.0;         // endpoint log-density drop below mode
    double init_halfwidth = 8.0;     // starting domain half-width
    std::uint64_t max_evals = 1000000;
};

/**
 * Normalized conditional distribution of V given the conditioning value,
 * represented by a cumulative grid over a truncated domain.
 *
 * The grid knots are the leaf boundaries of the adaptive integration, the
 * cumulative values run from 0 to 1, and evaluation between knots uses
 * monotone cubic interpolation anchored by the exact normalized density at
 * each knot.  Immutable and cheap to query.
 */
class ConditionalLaw {
public:
    [[nodiscard]] double rho() const { return rho_; }
    [[nodiscard]] double mu() const { return mu_; }
    [[nodiscard]] double log_norm_const() const { return log_norm_const_; }
    [[nodiscard]] double domain_lo() const { return knots_.front(); }
    [[nodiscard]] double domain_hi() const { return knots_.back(); }

    /// P(V <= v); 0 below the domain, 1 above it, nondecreasing throughout.
    [[nodiscard]] double cdf(double v) const;

    /// P(|V - mu| <= t) = cdf(mu + t) - cdf(mu - t) for t >= 0.
    [[nodiscard]] double cdf_abs(double t) const;

    /// Inverse CDF by bisection on the monotone interpolant.
    [[nodiscard]] double quantile(double p) const;

    [[nodiscard]] const std::vector<double>& knots() const { return knots_; }
    [[nodiscard]] const std::vector<double>& cum() const { return cum_; }
    [[nodiscard]] std::uint64_t evals_used() const { return evals_; }

private:
    friend ConditionalLaw build_law(const AssociationContext&,
                                    const std::vector<int>&,
                                    const LawOptions&);

    double rho_ = 0.0;
    double mu_ = 0.0;
    double log_norm_const_ = 0.0;
    std::vector<double> knots_;   // strictly increasing
    std::vector<double> cum_;     // cum_[0] = 0, cum_.back() = 1
    std::vector<double> slope_;   // monotonicity-limited CDF slopes at knots
    std::uint64_t evals_ = 0;
};

/// Builds the conditional law: golden-section mode search from v = 0,
/// domain expansion until the log-density has dropped tail_drop below the
/// mode at both ends, then adaptive composite Simpson integration of the
/// shifted density for the normalizing constant, the mean and the CDF grid.
ConditionalLaw build_law(const AssociationContext& ctx,
                         const std::vector<int>& mults,
                         const LawOptions& opts = LawOptions{});

inline ConditionalLaw build_law(const AssociationContext& ctx,
                                const std::vector<int>& mults,
                                double quad_tol) {
    LawOptions opts;
    opts.quad_tol = quad_tol;
    return build_law(ctx, mults, opts);
}

/// Free-function form of ConditionalLaw::cdf_abs.
inline double cdf_abs(const ConditionalLaw& law, double t) {
    return law.cdf_abs(t);
}

} // namespace vcim
