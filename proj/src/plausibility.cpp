#include "vcim/plausibility.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vcim/errors.hpp"

namespace vcim {

void GridSpec::validate() const {
    if (!(lo >= 0.0) || !(hi <= 1.0 - 1e-4) || !(lo < hi)) {
        throw ConfigError("grid must satisfy 0 <= lo < hi <= 1 - 1e-4");
    }
    if (points < 2) {
        throw ConfigError("grid needs at least 2 points");
    }
}

bool PlausibilityResult::all_points_ok() const {
    return failed_points() == 0;
}

int PlausibilityResult::failed_points() const {
    int n = 0;
    for (const auto& d : diagnostics) {
        if (!d.ok) ++n;
    }
    return n;
}

double pl_at(const EigenReduction& red, double rho, const LawOptions& opts,
             double rho_max) {
    const AssociationContext ctx = AssociationContext::at(rho, red, rho_max);
    const ConditionalLaw law = build_law(ctx, red.mults, opts);
    const double dev = std::abs(red.t_stat - ctx.phi - law.mu());
    return std::clamp(1.0 - law.cdf_abs(dev), 0.0, 1.0);
}

PlausibilityResult pl_curve(const EigenReduction& red, const GridSpec& grid,
                            const LawOptions& opts, double rho_max) {
    grid.validate();
    if (grid.hi > rho_max) {
        throw ConfigError("grid upper end exceeds rho_max");
    }

    PlausibilityResult res;
    res.grid.resize(grid.points);
    res.pl.resize(grid.points);
    res.diagnostics.resize(grid.points);
    for (int i = 0; i < grid.points; ++i) {
        res.grid[i] = grid.at(i);
        try {
            res.pl[i] = pl_at(red, res.grid[i], opts, rho_max);
        } catch (const Error& e) {
            res.pl[i] = std::numeric_limits<double>::quiet_NaN();
            res.diagnostics[i] = {false, e.what()};
        }
    }
    return res;
}

PlausibilityResult interval(const EigenReduction& red, double alpha,
                            const GridSpec& grid, double refine_tol,
                            const LawOptions& opts, double rho_max) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ConfigError("alpha must lie in (0, 1)");
    }
    if (!(refine_tol > 0.0)) {
        throw ConfigError("refine_tol must be positive");
    }

    PlausibilityResult res = pl_curve(red, grid, opts, rho_max);
    res.alpha = alpha;
    res.has_interval = true;

    // Work on the usable points only; failures stay in the diagnostics.
    std::vector<std::pair<double, double>> pts;
    pts.reserve(res.grid.size());
    for (std::size_t i = 0; i < res.grid.size(); ++i) {
        if (res.diagnostics[i].ok) pts.emplace_back(res.grid[i], res.pl[i]);
    }
    if (pts.empty()) {
        throw NumericalError("plausibility failed at every grid point");
    }

    const auto above = [alpha](const std::pair<double, double>& p) {
        return p.second > alpha;
    };

    int segments = 0;
    bool prev_above = false;
    for (const auto& p : pts) {
        const bool cur = above(p);
        if (cur && !prev_above) ++segments;
        prev_above = cur;
    }
    if (segments == 0) {
        res.empty = true;
        return res;
    }
    res.multimodal = segments > 1;

    // Bisection from the outside (pl <= alpha) toward the inside, so the
    // reported bound carries pl <= alpha within refine_tol.
    const auto refine = [&](double out, double in) {
        while (std::abs(in - out) > refine_tol) {
            const double mid = 0.5 * (out + in);
            double plm;
            try {
                plm = pl_at(red, mid, opts, rho_max);
            } catch (const Error&) {
                break; // keep the conservative bracket end
            }
            (plm > alpha ? in : out) = mid;
        }
        return out;
    };

    std::size_t first_in = 0;
    while (!above(pts[first_in])) ++first_in;
    std::size_t last_in = pts.size() - 1;
    while (!above(pts[last_in])) --last_in;

    res.lower = first_in == 0
                    ? pts.front().first
                    : refine(pts[first_in - 1].first, pts[first_in].first);
    res.upper = last_in == pts.size() - 1
                    ? pts.back().first
                    : refine(pts[last_in + 1].first, pts[last_in].first);
    return res;
}

} // namespace vcim
