#include "vcim/conditional_law.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/LU>

#include "vcim/errors.hpp"

namespace vcim {

namespace {

Eigen::MatrixXd stack_transform(const Eigen::MatrixXd& M) {
    const Eigen::Index m = M.cols();
    Eigen::MatrixXd A(m, m);
    A.row(0).setOnes();
    if (m > 1) A.bottomRows(m - 1) = M;
    return A;
}

/**
 * Unnormalized conditional log-density of V at v, with the affine solve
 * w(v) = w_h + dir * v precomputed so that each evaluation is a single
 * O(L) loop.  The log-sum-exp term is max-shifted, keeping the value
 * finite for arbitrarily large |v|.
 */
class LogQ {
public:
    LogQ(const AssociationContext& ctx, const std::vector<int>& mults,
         std::uint64_t max_evals)
        : budget_(max_evals) {
        const int L = static_cast<int>(mults.size());
        const int m = L - 1;
        if (ctx.M.cols() != m || ctx.h.size() != m - 1) {
            throw DimensionError("association context does not match mults");
        }

        const Eigen::MatrixXd A = stack_transform(ctx.M);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
        if (!lu.isInvertible()) {
            throw SingularTransformError(
                "stacked log-linear transform is singular");
        }
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
        rhs(0) = 1.0;
        const Eigen::VectorXd dir = lu.solve(rhs);
        rhs(0) = 0.0;
        if (m > 1) rhs.tail(m - 1) = ctx.h;
        const Eigen::VectorXd wh = lu.solve(rhs);

        const double scale = std::max(1.0, ctx.h.size() ? ctx.h.cwiseAbs().maxCoeff() : 0.0);
        if ((A * dir - Eigen::VectorXd::Unit(m, 0)).cwiseAbs().maxCoeff() > 1e-10 ||
            (A * wh - rhs).cwiseAbs().maxCoeff() > 1e-10 * scale) {
            throw SingularTransformError(
                "log-linear solve failed the residual check");
        }

        dir_.assign(dir.data(), dir.data() + m);
        wh_.assign(wh.data(), wh.data() + m);
        half_r_.resize(m);
        log_a_.resize(m);
        double nu = 0.0;
        const double rL = static_cast<double>(mults[L - 1]);
        for (int l = 0; l < L; ++l) nu += static_cast<double>(mults[l]);
        for (int l = 0; l < m; ++l) {
            half_r_[l] = 0.5 * static_cast<double>(mults[l]);
            log_a_[l] = std::log(static_cast<double>(mults[l]) / rL);
        }
        half_nu_ = 0.5 * nu;
    }

    double operator()(double v) const {
        if (++evals_ > budget_) {
            throw QuadratureFailure("evaluation budget exhausted");
        }
        const std::size_t m = dir_.size();
        double lin = 0.0;
        double mstar = 0.0; // the implicit "+1" term contributes exp(0)
        for (std::size_t l = 0; l < m; ++l) {
            const double w = wh_[l] + dir_[l] * v;
            lin += half_r_[l] * w;
            scratch_[l] = w + log_a_[l];
            if (scratch_[l] > mstar) mstar = scratch_[l];
        }
        double sum = std::exp(-mstar);
        for (std::size_t l = 0; l < m; ++l) {
            sum += std::exp(scratch_[l] - mstar);
        }
        return lin - half_nu_ * (mstar + std::log(sum));
    }

    [[nodiscard]] std::uint64_t evals() const { return evals_; }

    void prepare_scratch() { scratch_.resize(dir_.size()); }

private:
    std::vector<double> dir_, wh_, half_r_, log_a_;
    mutable std::vector<double> scratch_;
    double half_nu_ = 0.0;
    std::uint64_t budget_;
    mutable std::uint64_t evals_ = 0;
};

struct Leaf {
    double a, b;       // interval
    double fa, fb;     // shifted density at the ends
    double mass;       // Simpson estimate of the shifted density mass
    double vmom;       // Simpson estimate of the first moment
};

double simpson(double a, double b, double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double simpson_vmom(double a, double m, double b, double fa, double fm,
                    double fb) {
    return (b - a) / 6.0 * (a * fa + 4.0 * m * fm + b * fb);
}

struct Shifted {
    const LogQ& q;
    double ref;
    double operator()(double v) const { return std::exp(q(v) - ref); }
};

void refine_panel(const Shifted& f, double a, double m, double b, double fa,
                  double fm, double fb, double S0, double tol, int depth,
                  std::vector<Leaf>& leaves) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double Sl = simpson(a, m, fa, flm, fm);
    const double Sr = simpson(m, b, fm, frm, fb);
    const double err = (Sl + Sr - S0) / 15.0;

    if (std::abs(err) <= tol || depth >= 30 ||
        (b - a) <= 64.0 * std::numeric_limits<double>::epsilon() *
                       std::max(std::abs(a), std::abs(b))) {
        leaves.push_back({a, m, fa, fm, Sl, simpson_vmom(a, lm, m, fa, flm, fm)});
        leaves.push_back({m, b, fm, fb, Sr, simpson_vmom(m, rm, b, fm, frm, fb)});
        return;
    }
    refine_panel(f, a, lm, m, fa, flm, fm, Sl, 0.5 * tol, depth + 1, leaves);
    refine_panel(f, m, rm, b, fm, frm, fb, Sr, 0.5 * tol, depth + 1, leaves);
}

} // namespace

double log_density_u(const Eigen::VectorXd& u, const std::vector<int>& mults) {
    const int L = static_cast<int>(mults.size());
    if (L < 2 || u.size() != L - 1) {
        throw DimensionError("u must have length L-1");
    }
    double nu = 0.0;
    for (int l = 0; l < L; ++l) nu += static_cast<double>(mults[l]);
    const double rL = static_cast<double>(mults[L - 1]);

    double s = 0.0;
    double t = 1.0;
    for (int l = 0; l < L - 1; ++l) {
        if (!(u(l) > 0.0)) {
            throw DomainError("u must be strictly positive componentwise");
        }
        const double expo = 0.5 * static_cast<double>(mults[l]) - 1.0;
        if (expo != 0.0) s += expo * std::log(u(l));
        t += static_cast<double>(mults[l]) / rL * u(l);
    }
    return s - 0.5 * nu * std::log(t);
}

Eigen::VectorXd solve_w(double v, const Eigen::VectorXd& h,
                        const Eigen::MatrixXd& M) {
    const Eigen::Index m = M.cols();
    if (h.size() != m - 1 || M.rows() != m - 1) {
        throw DimensionError("M must be (L-2) x (L-1) with h of length L-2");
    }
    const Eigen::MatrixXd A = stack_transform(M);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (!lu.isInvertible()) {
        throw SingularTransformError("stacked log-linear transform is singular");
    }
    Eigen::VectorXd rhs(m);
    rhs(0) = v;
    if (m > 1) rhs.tail(m - 1) = h;
    return lu.solve(rhs);
}

double log_q(double v, const AssociationContext& ctx,
             const std::vector<int>& mults) {
    LogQ q(ctx, mults, std::numeric_limits<std::uint64_t>::max());
    q.prepare_scratch();
    return q(v);
}

double ConditionalLaw::cdf(double v) const {
    if (v <= knots_.front()) return 0.0;
    if (v >= knots_.back()) return 1.0;
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), v);
    const std::size_t k = static_cast<std::size_t>(it - knots_.begin()) - 1;
    const double h = knots_[k + 1] - knots_[k];
    const double t = (v - knots_[k]) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double val = (2.0 * t3 - 3.0 * t2 + 1.0) * cum_[k] +
                       (t3 - 2.0 * t2 + t) * h * slope_[k] +
                       (-2.0 * t3 + 3.0 * t2) * cum_[k + 1] +
                       (t3 - t2) * h * slope_[k + 1];
    return std::clamp(val, cum_[k], cum_[k + 1]);
}

double ConditionalLaw::cdf_abs(double t) const {
    if (t < 0.0) {
        throw DomainError("cdf_abs requires t >= 0");
    }
    return std::clamp(cdf(mu_ + t) - cdf(mu_ - t), 0.0, 1.0);
}

double ConditionalLaw::quantile(double p) const {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw DomainError("quantile requires p in [0, 1]");
    }
    if (p <= 0.0) return knots_.front();
    if (p >= 1.0) return knots_.back();
    // Bracketing knot, then bisection on the monotone interpolant.
    const auto it = std::upper_bound(cum_.begin(), cum_.end(), p);
    std::size_t k = static_cast<std::size_t>(it - cum_.begin());
    if (k == 0) k = 1;
    if (k >= cum_.size()) k = cum_.size() - 1;
    double lo = knots_[k - 1], hi = knots_[k];
    for (int iter = 0; iter < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(hi));
         ++iter) {
        const double mid = 0.5 * (lo + hi);
        (cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

ConditionalLaw build_law(const AssociationContext& ctx,
                         const std::vector<int>& mults,
                         const LawOptions& opts) {
    if (!(opts.quad_tol > 0.0 && opts.quad_tol <= 1e-4)) {
        throw ConfigError("quad_tol must lie in (0, 1e-4]");
    }

    LogQ q(ctx, mults, opts.max_evals);
    q.prepare_scratch();

    // Bracket the mode starting from v = 0 with geometric expansion.
    double a = -1.0, b = 0.0, c = 1.0;
    double fa = q(a), fb = q(b), fc = q(c);
    {
        double step = 1.0;
        int guard = 0;
        while (fc > fb) {
            a = b; fa = fb;
            b = c; fb = fc;
            step *= 2.0;
            c = b + step;
            fc = q(c);
            if (++guard > 200 || !std::isfinite(c)) {
                throw ModeSearchFailure("mode bracketing ran away (right)");
            }
        }
        step = 1.0;
        guard = 0;
        while (fa > fb) {
            c = b; fc = fb;
            b = a; fb = fa;
            step *= 2.0;
            a = b - step;
            fa = q(a);
            if (++guard > 200 || !std::isfinite(a)) {
                throw ModeSearchFailure("mode bracketing ran away (left)");
            }
        }
    }

    // Golden-section refinement of the bracketed maximum.
    {
        constexpr double gr = 0.6180339887498949;
        const double tol =
            1e-9 * std::max({1.0, std::abs(a), std::abs(c)});
        double x1 = c - gr * (c - a);
        double x2 = a + gr * (c - a);
        double f1 = q(x1), f2 = q(x2);
        while (c - a > tol) {
            if (f1 < f2) {
                a = x1;
                x1 = x2; f1 = f2;
                x2 = a + gr * (c - a);
                f2 = q(x2);
            } else {
                c = x2;
                x2 = x1; f2 = f1;
                x1 = c - gr * (c - a);
                f1 = q(x1);
            }
        }
    }
    const double v_mode = 0.5 * (a + c);
    const double logq_mode = q(v_mode);
    if (!std::isfinite(logq_mode)) {
        throw ModeSearchFailure("log-density not finite at the mode");
    }

    // Expand the symmetric domain until both tails have dropped far enough.
    double s = opts.init_halfwidth;
    {
        const double target = logq_mode - opts.tail_drop;
        int guard = 0;
        while (q(v_mode - s) > target || q(v_mode + s) > target) {
            s *= 2.0;
            if (++guard > 60) {
                throw QuadratureFailure("tail truncation not certified");
            }
        }
    }
    const double lo = v_mode - s, hi = v_mode + s;

    const Shifted f{q, logq_mode};

    // Coarse composite Simpson pass over uniform panels; panel nodes are
    // reused as the first refinement level.
    const int n0 = std::max(2, (opts.min_knots + 1) / 2);
    std::vector<double> xs(n0 + 1), fxs(n0 + 1), mids(n0), fmids(n0);
    for (int i = 0; i <= n0; ++i) {
        xs[i] = lo + (hi - lo) * static_cast<double>(i) / n0;
        fxs[i] = f(xs[i]);
    }
    double rough = 0.0;
    for (int i = 0; i < n0; ++i) {
        mids[i] = 0.5 * (xs[i] + xs[i + 1]);
        fmids[i] = f(mids[i]);
        rough += simpson(xs[i], xs[i + 1], fxs[i], fmids[i], fxs[i + 1]);
    }
    if (!(rough > 0.0) || !std::isfinite(rough)) {
        throw QuadratureFailure("coarse pass produced a nonpositive mass");
    }

    const double tol_panel = opts.quad_tol * rough / n0;
    std::vector<Leaf> leaves;
    leaves.reserve(static_cast<std::size_t>(4 * n0));
    for (int i = 0; i < n0; ++i) {
        const double S0 =
            simpson(xs[i], xs[i + 1], fxs[i], fmids[i], fxs[i + 1]);
        refine_panel(f, xs[i], mids[i], xs[i + 1], fxs[i], fmids[i], fxs[i + 1],
                     S0, tol_panel, 0, leaves);
    }

    ConditionalLaw law;
    law.rho_ = ctx.rho;
    const std::size_t nleaf = leaves.size();
    law.knots_.resize(nleaf + 1);
    law.cum_.resize(nleaf + 1);
    law.slope_.resize(nleaf + 1);

    double mass = 0.0, vmom = 0.0;
    law.knots_[0] = leaves[0].a;
    law.cum_[0] = 0.0;
    for (std::size_t i = 0; i < nleaf; ++i) {
        mass += leaves[i].mass;
        vmom += leaves[i].vmom;
        law.knots_[i + 1] = leaves[i].b;
        law.cum_[i + 1] = mass;
    }
    if (!(mass > 0.0) || !std::isfinite(mass)) {
        throw QuadratureFailure("normalizing constant is not positive");
    }

    law.mu_ = vmom / mass;
    law.log_norm_const_ = std::log(mass) + logq_mode;
    for (std::size_t i = 0; i <= nleaf; ++i) {
        law.cum_[i] /= mass;
    }
    law.cum_[0] = 0.0;
    law.cum_[nleaf] = 1.0;

    // CDF slopes are the normalized density values at the knots, capped at
    // three times the neighboring secant slopes so the cubic interpolant
    // stays monotone.
    law.slope_[0] = leaves[0].fa / mass;
    for (std::size_t i = 0; i < nleaf; ++i) {
        law.slope_[i + 1] = leaves[i].fb / mass;
    }
    for (std::size_t i = 0; i < nleaf; ++i) {
        const double width = law.knots_[i + 1] - law.knots_[i];
        const double secant =
            width > 0.0 ? (law.cum_[i + 1] - law.cum_[i]) / width : 0.0;
        const double cap = 3.0 * std::max(secant, 0.0);
        law.slope_[i] = std::min(law.slope_[i], cap > 0.0 ? cap : 0.0);
        law.slope_[i + 1] = std::min(law.slope_[i + 1], cap > 0.0 ? cap : 0.0);
    }

    law.evals_ = q.evals();
    return law;
}

} // namespace vcim
