#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "vcim/association.hpp"
#include "vcim/errors.hpp"
#include "vcim/rng.hpp"

using namespace vcim;

namespace {

Eigen::VectorXd assay_lambdas() {
    Eigen::VectorXd lam(3);
    lam << 4.55, 1.0, 0.0;
    return lam;
}

// Random strictly decreasing eigenvalue set with lambda_L = 0.
Eigen::VectorXd random_lambdas(int L, Rng& rng) {
    Eigen::VectorXd lam(L);
    double cur = 0.0;
    for (int l = L - 1; l >= 0; --l) {
        lam(l) = cur;
        cur += 0.2 + 2.0 * rng.uniform();
    }
    return lam;
}

} // namespace

TEST_CASE("f equals one at rho = 0") {
    const Eigen::VectorXd f = f_values(0.0, assay_lambdas());
    REQUIRE(f.size() == 2);
    CHECK(f(0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(f(1) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("f hand values on the three-eigenvalue fixture") {
    const Eigen::VectorXd f = f_values(0.5, assay_lambdas());
    CHECK(f(0) == doctest::Approx((1.0 + 0.5 * 3.55) / 0.5).epsilon(1e-14));
    CHECK(f(0) == doctest::Approx(5.55).epsilon(1e-14));
    CHECK(f(1) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("f stays finite and positive near the truncation point") {
    const Eigen::VectorXd f = f_values(kDefaultRhoMax, assay_lambdas());
    for (Eigen::Index l = 0; l < f.size(); ++l) {
        CHECK(f(l) > 0.0);
        CHECK(std::isfinite(f(l)));
    }
    CHECK(f(0) > 1e3); // 1/(1-rho) scale
}

TEST_CASE("rho outside the domain is rejected") {
    CHECK_THROWS_AS(f_values(-0.1, assay_lambdas()), DomainError);
    CHECK_THROWS_AS(f_values(0.99995, assay_lambdas()), DomainError);
    CHECK_THROWS_AS(phi(1.5, assay_lambdas()), DomainError);
    CHECK_THROWS_AS(g_vector(-1e-9, assay_lambdas()), DomainError);
}

TEST_CASE("phi values") {
    CHECK(phi(0.0, assay_lambdas()) == 0.0);
    CHECK(phi(0.5, assay_lambdas()) ==
          doctest::Approx(std::log(5.55) + std::log(2.0)).epsilon(1e-14));

    Eigen::VectorXd lam2(2);
    lam2 << 2.0, 0.0;
    CHECK(phi(0.5, lam2) == doctest::Approx(std::log(3.0)).epsilon(1e-14));
}

TEST_CASE("phi is strictly increasing on a dense grid") {
    const Eigen::VectorXd lam = assay_lambdas();
    double prev = phi(0.0, lam);
    for (int i = 1; i <= 400; ++i) {
        const double rho = kDefaultRhoMax * i / 400.0;
        const double cur = phi(rho, lam);
        CHECK(cur > prev);
        prev = cur;
    }
}

TEST_CASE("g closed form at rho = 0 and hand values") {
    const Eigen::VectorXd lam = assay_lambdas();
    const Eigen::VectorXd g0 = g_vector(0.0, lam);
    CHECK(g0(0) == doctest::Approx(4.55).epsilon(1e-14));
    CHECK(g0(1) == doctest::Approx(1.0).epsilon(1e-14));

    const Eigen::VectorXd g = g_vector(0.5, lam);
    CHECK(g(0) == doctest::Approx(3.55 / 2.775 + 2.0).epsilon(1e-12));
    CHECK(g(1) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("g matches central finite differences of log f") {
    Rng rng(101);
    const double step = 1e-6;
    for (int trial = 0; trial < 12; ++trial) {
        const int L = 2 + static_cast<int>(rng.uniform() * 4.0);
        const Eigen::VectorXd lam = random_lambdas(L, rng);
        const double rho = 0.01 + 0.9 * rng.uniform();

        const Eigen::VectorXd g = g_vector(rho, lam);
        const Eigen::VectorXd fp = f_values(rho + step, lam);
        const Eigen::VectorXd fm = f_values(rho - step, lam);
        for (int l = 0; l < L - 1; ++l) {
            const double fd = (std::log(fp(l)) - std::log(fm(l))) / (2.0 * step);
            CHECK(g(l) == doctest::Approx(fd).epsilon(1e-6));
            CHECK(g(l) > 0.0);
        }

        // d phi / d rho = 1'g
        const double phid =
            (phi(rho + step, lam) - phi(rho - step, lam)) / (2.0 * step);
        CHECK(phid == doctest::Approx(g.sum()).epsilon(1e-6));
    }
}

TEST_CASE("conditioning matrix rows are an orthonormal complement of g") {
    Rng rng(103);
    for (int trial = 0; trial < 12; ++trial) {
        const int L = 3 + static_cast<int>(rng.uniform() * 4.0);
        const Eigen::VectorXd lam = random_lambdas(L, rng);
        const double rho = 0.93 * rng.uniform();

        const Eigen::MatrixXd M = conditioning_matrix(rho, lam);
        const Eigen::VectorXd g = g_vector(rho, lam);
        REQUIRE(M.rows() == L - 2);
        REQUIRE(M.cols() == L - 1);
        CHECK((M * g).cwiseAbs().maxCoeff() < 1e-12 * g.norm());
        CHECK((M * M.transpose() - Eigen::MatrixXd::Identity(L - 2, L - 2))
                  .cwiseAbs()
                  .maxCoeff() < 1e-12);
    }
}

TEST_CASE("conditioning matrix for L = 2 is empty") {
    Eigen::VectorXd lam2(2);
    lam2 << 2.0, 0.0;
    const Eigen::MatrixXd M = conditioning_matrix(0.4, lam2);
    CHECK(M.rows() == 0);
    CHECK(M.cols() == 1);
}

TEST_CASE("conditioning matrix at L = 3 is the unique unit complement") {
    const Eigen::VectorXd lam = assay_lambdas();
    const double rho = 0.3;
    const Eigen::MatrixXd M = conditioning_matrix(rho, lam);
    const Eigen::VectorXd g = g_vector(rho, lam);
    Eigen::VectorXd perp(2);
    perp << g(1), -g(0);
    perp.normalize();
    CHECK(std::abs(std::abs(M.row(0).dot(perp)) - 1.0) < 1e-12);
}

TEST_CASE("conditioning value vanishes when the data sit at f") {
    const Eigen::VectorXd lam = assay_lambdas();
    const double rho = 0.5;
    const Eigen::VectorXd f = f_values(rho, lam);
    const Eigen::MatrixXd M = conditioning_matrix(rho, lam);
    const Eigen::VectorXd h = conditioning_value(f, f, M);
    REQUIRE(h.size() == 1);
    CHECK(std::abs(h(0)) < 1e-14);
}

TEST_CASE("conditioning value rejects nonpositive ratios") {
    const Eigen::VectorXd lam = assay_lambdas();
    const Eigen::VectorXd f = f_values(0.2, lam);
    const Eigen::MatrixXd M = conditioning_matrix(0.2, lam);
    Eigen::VectorXd x = f;
    x(0) = 0.0;
    CHECK_THROWS_AS(conditioning_value(x, f, M), DomainError);
}

TEST_CASE("association context assembles all pieces consistently") {
    Eigen::VectorXd S(3);
    S << 5.55, 2.0, 10.0;
    const EigenReduction red =
        reduction_from_stats(assay_lambdas(), {1, 1, 10}, S);
    const AssociationContext ctx = AssociationContext::at(0.5, red);

    CHECK(ctx.rho == 0.5);
    CHECK(ctx.f(0) == doctest::Approx(5.55));
    CHECK(ctx.phi == doctest::Approx(std::log(5.55) + std::log(2.0)));
    // ratio_x equals f at rho = 0.5 for these statistics, so h = 0.
    CHECK(std::abs(ctx.h(0)) < 1e-13);
    CHECK((ctx.M * ctx.g).cwiseAbs().maxCoeff() < 1e-12);
}
