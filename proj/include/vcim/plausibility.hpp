#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vcim/conditional_law.hpp"
#include "vcim/reduction.hpp"

namespace vcim {

struct GridSpec {
    double lo = 0.0;
    double hi = kDefaultRhoMax;
    int points = 400;

    /// Throws ConfigError unless 0 <= lo < hi <= 1 - 1e-4 and points >= 2.
    void validate() const;

    [[nodiscard]] double at(int i) const {
        return lo + (hi - lo) * static_cast<double>(i) /
                        static_cast<double>(points - 1);
    }
};

struct PointDiagnostic {
    bool ok = true;
    std::string message;
};

/**
 * Plausibility curve and (optionally) the level-alpha plausibility
 * interval derived from it.  The interval is the convex hull of
 * {rho: pl(rho) > alpha}; disconnected crossings set the multimodal flag.
 */
struct PlausibilityResult {
    std::vector<double> grid;
    std::vector<double> pl;
    std::vector<PointDiagnostic> diagnostics;

    std::optional<double> alpha;
    bool has_interval = false;
    bool empty = false;        // pl <= alpha everywhere on the grid
    bool multimodal = false;   // more than one grid segment above alpha
    double lower = 0.0;
    double upper = 0.0;

    [[nodiscard]] bool all_points_ok() const;
    [[nodiscard]] int failed_points() const;
};

/// pl(rho) = 1 - F_{h,rho}(|t_stat - phi(rho) - mu_rho|), the plausibility
/// of the singleton assertion {rho}; localization point equals rho.
double pl_at(const EigenReduction& red, double rho,
             const LawOptions& opts = LawOptions{},
             double rho_max = kDefaultRhoMax);

/// Evaluates pl over the grid; per-point failures land in diagnostics
/// (pl = NaN) instead of aborting the sweep.
PlausibilityResult pl_curve(const EigenReduction& red, const GridSpec& grid,
                            const LawOptions& opts = LawOptions{},
                            double rho_max = kDefaultRhoMax);

/// Grid scan plus bisection refinement of the alpha crossings.  Bounds that
/// sit on a grid boundary with pl > alpha stay on the boundary.  An empty
/// result (pl <= alpha everywhere) is reported in the flags, not thrown.
PlausibilityResult interval(const EigenReduction& red, double alpha,
                            const GridSpec& grid = GridSpec{},
                            double refine_tol = 1e-6,
                            const LawOptions& opts = LawOptions{},
                            double rho_max = kDefaultRhoMax);

/// psi = rho / (1 - rho); maps plausibility bounds for rho onto the
/// variance-ratio scale.
inline double rho_to_psi(double rho) { return rho / (1.0 - rho); }

} // namespace vcim
