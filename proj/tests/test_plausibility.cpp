#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include <Eigen/Dense>

#include "support.hpp"
#include "vcim/association.hpp"
#include "vcim/conditional_law.hpp"
#include "vcim/errors.hpp"
#include "vcim/oracle.hpp"
#include "vcim/plausibility.hpp"
#include "vcim/rng.hpp"
#include "vcim/sim.hpp"

using namespace vcim;

namespace {

// Two-stratum reduction whose t statistic is pinned at mu + phi(rho) +
// offset, so pl_at(rho) lands at a known spot of the cdf_abs curve.
EigenReduction pinned_two_stratum(int r1, int rL, double rho, double offset) {
    Eigen::VectorXd lam(2);
    lam << 2.0, 0.0;

    // The L = 2 law does not depend on the statistics; grab mu first.
    Eigen::VectorXd seed_S(2);
    seed_S << 1.0, 1.0;
    const EigenReduction probe = reduction_from_stats(lam, {r1, rL}, seed_S);
    const AssociationContext ctx = AssociationContext::at(rho, probe);
    const ConditionalLaw law = build_law(ctx, probe.mults);

    const double target_t = ctx.phi + law.mu() + offset;
    Eigen::VectorXd S(2);
    S(1) = static_cast<double>(rL);
    S(0) = static_cast<double>(r1) * std::exp(target_t);
    return reduction_from_stats(lam, {r1, rL}, S);
}

EigenReduction assay_reduction(double s1, double s2, double s3) {
    Eigen::VectorXd lam(3), S(3);
    lam << 4.55, 1.0, 0.0;
    S << s1, s2, s3;
    return reduction_from_stats(lam, {1, 1, 10}, S);
}

} // namespace

TEST_CASE("pl equals one when the statistic sits at phi + mu") {
    const EigenReduction red = pinned_two_stratum(2, 4, 0.3, 0.0);
    CHECK(pl_at(red, 0.3) > 1.0 - 1e-10);
}

TEST_CASE("pl collapses far from the center") {
    for (double offset : {50.0, -50.0}) {
        const EigenReduction red = pinned_two_stratum(2, 4, 0.3, offset);
        CHECK(pl_at(red, 0.3) < 1e-8);
    }
}

TEST_CASE("pl at L = 2 matches the F-distribution oracle") {
    Eigen::VectorXd lam(2), S(2);
    lam << 3.0, 0.0;
    S << 4.2, 7.9;
    const EigenReduction red = reduction_from_stats(lam, {2, 4}, S);

    // Oracle mean of log F(2,4) by adaptive integration.
    const auto logf_pdf = [](double v) {
        return oracle::f_pdf(std::exp(v), 2.0, 4.0) * std::exp(v);
    };
    const double mu_ref =
        oracle::integrate([&](double v) { return v * logf_pdf(v); }, -40.0,
                          40.0, 1e-12) /
        oracle::integrate(logf_pdf, -40.0, 40.0, 1e-12);

    for (double rho : {0.0, 0.25, 0.5, 0.75}) {
        const double dev = std::abs(red.t_stat - phi(rho, lam) - mu_ref);
        const double target = 1.0 - (oracle::f_cdf(std::exp(mu_ref + dev), 2, 4) -
                                     oracle::f_cdf(std::exp(mu_ref - dev), 2, 4));
        CHECK(pl_at(red, rho) == doctest::Approx(target).epsilon(1e-6));
    }
}

TEST_CASE("pl is invariant under data rescaling") {
    Rng rng(2024);
    const MixedModelSpec model = gen_oneway({2, 4, 4, 5}, 1.0, 1.0, rng);
    const EigenReduction red1 = reduce(model);

    for (double c : {2.5, 1e3, 1e-4}) {
        MixedModelSpec scaled = model;
        scaled.y = c * model.y;
        const EigenReduction red2 = reduce(scaled);
        for (double rho : {0.1, 0.6}) {
            CHECK(std::abs(pl_at(red1, rho) - pl_at(red2, rho)) < 1e-10);
        }
    }
}

TEST_CASE("curve evaluation is deterministic") {
    const EigenReduction red = assay_reduction(15.3, 4.7, 21.9);
    GridSpec grid;
    grid.points = 60;
    const PlausibilityResult a = pl_curve(red, grid);
    const PlausibilityResult b = pl_curve(red, grid);
    REQUIRE(a.pl.size() == b.pl.size());
    CHECK(std::memcmp(a.pl.data(), b.pl.data(),
                      a.pl.size() * sizeof(double)) == 0);
    CHECK(a.all_points_ok());
    for (double p : a.pl) {
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
    }
}

TEST_CASE("pl at rho = 0 is large when data are drawn at rho = 0") {
    // With no group effect, pl(0) should exceed 0.2 in a clear majority of
    // replications (it is uniform under the generating law).
    Eigen::VectorXd lam(3);
    lam << 4.55, 1.0, 0.0;
    const std::vector<int> mults{1, 1, 10};
    int hits = 0;
    const int reps = 25;
    for (int rep = 0; rep < reps; ++rep) {
        Rng rng(9000 + rep);
        const Eigen::VectorXd S = gen_baseline(lam, mults, 0.0, 1.3, rng);
        const EigenReduction red = reduction_from_stats(lam, mults, S);
        if (pl_at(red, 0.0) > 0.2) ++hits;
    }
    CHECK(hits > reps / 2);
}

TEST_CASE("grid validation") {
    const EigenReduction red = assay_reduction(15.3, 4.7, 21.9);
    GridSpec one_point;
    one_point.points = 1;
    CHECK_THROWS_AS(pl_curve(red, one_point), ConfigError);

    GridSpec inverted;
    inverted.lo = 0.5;
    inverted.hi = 0.2;
    CHECK_THROWS_AS(pl_curve(red, inverted), ConfigError);

    GridSpec too_high;
    too_high.hi = 0.99999;
    CHECK_THROWS_AS(pl_curve(red, too_high), ConfigError);

    CHECK_THROWS_AS(interval(red, 0.0), ConfigError);
    CHECK_THROWS_AS(interval(red, 1.0), ConfigError);
}

TEST_CASE("interval brackets the region above alpha") {
    const EigenReduction red = assay_reduction(15.3, 4.7, 21.9);
    GridSpec grid;
    grid.points = 200;
    const PlausibilityResult res = interval(red, 0.05, grid);

    REQUIRE(res.has_interval);
    REQUIRE(!res.empty);
    CHECK(res.lower >= 0.0);
    CHECK(res.upper <= kDefaultRhoMax);
    CHECK(res.lower < res.upper);

    // pl <= alpha at the refined bounds (outer side), > alpha inside.
    if (res.lower > 0.0) {
        CHECK(pl_at(red, res.lower) <= 0.05 + 1e-9);
    }
    if (res.upper < kDefaultRhoMax) {
        CHECK(pl_at(red, res.upper + 2e-6) <= 0.05 + 1e-3);
        CHECK(pl_at(red, res.upper - 2e-6) > 0.05 - 1e-3);
    }
    const double mid = 0.5 * (res.lower + res.upper);
    CHECK(pl_at(red, mid) > 0.05);
}

TEST_CASE("intervals nest across levels") {
    const EigenReduction red = assay_reduction(15.3, 4.7, 21.9);
    GridSpec grid;
    grid.points = 150;
    const PlausibilityResult wide = interval(red, 0.05, grid);
    const PlausibilityResult mid = interval(red, 0.10, grid);
    const PlausibilityResult narrow = interval(red, 0.50, grid);

    CHECK(wide.lower <= mid.lower + 1e-9);
    CHECK(mid.lower <= narrow.lower + 1e-9);
    CHECK(narrow.upper <= mid.upper + 1e-9);
    CHECK(mid.upper <= wide.upper + 1e-9);
}

TEST_CASE("bisection refinement contract") {
    const EigenReduction red = assay_reduction(15.3, 4.7, 21.9);
    GridSpec grid;
    grid.points = 120;
    const PlausibilityResult coarse = interval(red, 0.05, grid, 1e-4);
    const PlausibilityResult fine = interval(red, 0.05, grid, 5e-5);
    CHECK(std::abs(coarse.upper - fine.upper) < 1e-4);
    const PlausibilityResult finer = interval(red, 0.05, grid, 2.5e-5);
    CHECK(std::abs(fine.upper - finer.upper) < 5e-5);
}

TEST_CASE("empty interval is reported, not thrown") {
    // Data pinned below the rho = 0 center: pl decreases in rho from a
    // small pl(0), so a moderate alpha empties the region.
    const EigenReduction red = pinned_two_stratum(2, 4, 0.0, -3.0);
    const double pl0 = pl_at(red, 0.0);
    REQUIRE(pl0 < 0.4);

    GridSpec grid;
    grid.points = 80;
    const PlausibilityResult res = interval(red, 0.6, grid);
    CHECK(res.has_interval);
    CHECK(res.empty);
    CHECK(!res.multimodal);
}

TEST_CASE("lower bound sits on the boundary when pl(0) is above alpha") {
    Rng rng(424242);
    Eigen::VectorXd lam(3);
    lam << 4.55, 1.0, 0.0;
    const std::vector<int> mults{1, 1, 10};
    const Eigen::VectorXd S = gen_baseline(lam, mults, 0.05, 1.0, rng);
    const EigenReduction red = reduction_from_stats(lam, mults, S);
    REQUIRE(pl_at(red, 0.0) > 0.05);

    GridSpec grid;
    grid.points = 150;
    const PlausibilityResult res = interval(red, 0.05, grid);
    CHECK(!res.empty);
    CHECK(res.lower == 0.0);
}

TEST_CASE("psi mapping") {
    CHECK(rho_to_psi(0.0) == 0.0);
    CHECK(rho_to_psi(0.5) == doctest::Approx(1.0));
    CHECK(rho_to_psi(0.9) == doctest::Approx(9.0));
}
