#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <aoii/numerics.hpp>

#include "oracles.hpp"

using namespace aoii;

TEST_CASE("lambert_w0 identities") {
    CHECK(lambert_w0(0.0) == 0.0);
    CHECK(lambert_w0(-1.0 / std::exp(1.0)) == Catch::Approx(-1.0).margin(1e-7));
    CHECK(lambert_w0(std::exp(1.0)) == Catch::Approx(1.0).epsilon(1e-14));
    // Omega constant
    CHECK(lambert_w0(1.0) == Catch::Approx(0.5671432904097838).epsilon(1e-14));
}

TEST_CASE("lambert_w0 matches bisection oracle") {
    CHECK(lambert_w0(-2.0 * std::exp(-2.0)) == Catch::Approx(-0.40638).margin(5e-6));
    for (double x : {-0.36, -0.2, -0.1, -1e-8, 1e-8, 0.5, 1.0, 10.0, 1e3, 1e10}) {
        double w = lambert_w0(x);
        CHECK(w == Catch::Approx(oracle::lambert_bisect(x)).margin(1e-12).epsilon(1e-12));
        // defining identity
        CHECK(w * std::exp(w) == Catch::Approx(x).margin(1e-13).epsilon(1e-12));
    }
}

TEST_CASE("lambert_w0 domain guard") {
    CHECK_THROWS_AS(lambert_w0(-0.368), DomainError);
    CHECK_THROWS_AS(lambert_w0(-1.0), DomainError);
    // just inside the branch point is fine and close to -1
    double w = lambert_w0(-1.0 / std::exp(1.0) + 1e-12);
    CHECK(w == Catch::Approx(-1.0 + std::sqrt(2.0 * std::exp(1.0) * 1e-12)).margin(1e-8));
}

TEST_CASE("fixed_point examples") {
    CHECK(fixed_point([](double) { return 0.5; }, 0.0) == Catch::Approx(0.5).margin(1e-12));

    double eta_half = fixed_point([](double x) { return std::exp(-2.0 * (1.0 - x)); }, 0.2);
    CHECK(eta_half == Catch::Approx(0.2032).margin(5e-5));
    CHECK(eta_half == Catch::Approx(oracle::eta_bisect(0.5)).margin(1e-10));

    double eta_b = fixed_point([](double x) { return std::exp(-1.255 * (1.0 - x)); }, 0.4);
    CHECK(eta_b == Catch::Approx(0.6231).margin(5e-4));
    CHECK(eta_b == Catch::Approx(oracle::eta_bisect(1.0 / 1.255)).margin(1e-10));

    // Dottie number, a contraction handled by plain iteration
    CHECK(fixed_point([](double x) { return std::cos(x); }, 0.0) ==
          Catch::Approx(0.7390851332151607).margin(1e-10));
}

TEST_CASE("fixed_point reports non-convergence") {
    CHECK_THROWS_AS(fixed_point([](double x) { return x + 0.5; }, 0.0), NonConvergence);
}

TEST_CASE("minimize_1d examples") {
    SolveSettings s;
    auto [x1, f1] = minimize_1d([](double x) { return (x - 3.0) * (x - 3.0); }, {0.0, 10.0}, s);
    CHECK(x1 == Catch::Approx(3.0).margin(1e-6));
    CHECK(f1 == Catch::Approx(0.0).margin(1e-12));

    auto [x2, f2] = minimize_1d([](double x) { return x; }, {5.0, 10.0}, s);
    CHECK(x2 == 5.0); // boundary minimum returned exactly
    CHECK(f2 == 5.0);

    auto [x3, f3] = minimize_1d([](double x) { return 1.0 / x + x / 4.0; }, {1.0, 4.0}, s);
    CHECK(x3 == Catch::Approx(2.0).margin(1e-6));
    CHECK(f3 == Catch::Approx(1.0).epsilon(1e-12));

    // decreasing -> upper boundary
    auto [x4, f4] = minimize_1d([](double x) { return -x; }, {0.0, 2.0}, s);
    CHECK(x4 == 2.0);
    CHECK(f4 == -2.0);
}

TEST_CASE("minimize_1d rejects an empty box") {
    CHECK_THROWS_AS(minimize_1d([](double x) { return x; }, {3.0, 1.0}, {}), DomainError);
}

TEST_CASE("solver settings defaults") {
    SolveSettings s;
    CHECK(s.abs_tol == 1e-12);
    CHECK(s.max_iter == 200);
}
