#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vcim/reduction.hpp"

namespace vcim::oracle {

// Reference distribution functions (independent of the quadrature-based
// law machinery; backed by series/continued-fraction special functions).
double f_cdf(double x, double d1, double d2);
double f_pdf(double x, double d1, double d2);
double f_quantile(double p, double d1, double d2);
double chisq_quantile(double p, int df);

/// Kolmogorov-Smirnov statistic of sorted samples against a model CDF.
double ks_statistic(const std::vector<double>& sorted_samples,
                    const std::function<double(double)>& cdf);

/// KS statistic of values against the Unif(0,1) CDF.
double ks_uniform(std::vector<double> values);

/// Critical value of the KS statistic at the given significance level
/// (asymptotic Kolmogorov distribution).
double ks_critical(double level, std::size_t n);

/// Recursive adaptive Simpson integration; plain and self-contained so it
/// can serve as an independent cross-check of the production quadrature.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol);

/// Draws n independent realizations of U_component from the chi-square
/// ratio construction U_l = (V_l/r_l)/(V_L/r_L), via inverse-transform
/// sampling.  Entirely separate from the closed-form kernel.
std::vector<double> sample_u_component(const std::vector<int>& mults,
                                       int component, std::size_t n,
                                       std::uint64_t seed);

/// CDF of the U_component marginal obtained by numerically integrating the
/// closed-form kernel over the remaining components, evaluated on grid
/// (which must be increasing and positive).
std::vector<double> kernel_marginal_cdf(const std::vector<int>& mults,
                                        int component,
                                        const std::vector<double>& grid);

struct KsCheck {
    double statistic = 0.0;
    double critical = 0.0;
    [[nodiscard]] bool pass() const { return statistic < critical; }
};

/// Full marginal validation: MC samples of U_component against the
/// numerically integrated kernel marginal, KS at the given level.
KsCheck marginal_ks(const std::vector<int>& mults, int component,
                    std::size_t n_draws, double level, std::uint64_t seed);

struct CheckItem {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct CheckReport {
    std::vector<CheckItem> items;
    [[nodiscard]] bool all_pass() const {
        for (const auto& item : items) {
            if (!item.pass) return false;
        }
        return true;
    }
};

/// Self-diagnostic suite: closed-form law checks at L = 2, Monte Carlo
/// density validation, conditioning-basis invariance.
CheckReport run_diagnostics(std::uint64_t seed);

} // namespace vcim::oracle
