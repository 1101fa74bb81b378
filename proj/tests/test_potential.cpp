#include <cmath>
#include <vector>

#include "chs/potential.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace chs;

namespace {
PotentialSpec log_spec(double lambda = 3.0) {
    PotentialSpec s;
    s.lambda = lambda;
    return s;
}
}  // namespace

TEST_CASE("f1: logarithmic values and symmetry") {
    const auto spec = log_spec();
    CHECK(f1(spec, 0.5) == doctest::Approx(std::log(0.5)).epsilon(1e-14));
    CHECK(f1(spec, 0.3) == doctest::Approx(f1(spec, 0.7)).epsilon(1e-14));
    // Independent high-precision evaluation of 0.25 ln 0.25 + 0.75 ln 0.75.
    const long double exact = 0.25L * std::log(0.25L) + 0.75L * std::log(0.75L);
    CHECK(f1(spec, 0.25) == doctest::Approx(static_cast<double>(exact)).epsilon(1e-14));
    CHECK(f1(spec, 0.25) == doctest::Approx(-0.5623351446188083).epsilon(1e-12));
}

TEST_CASE("f1: domain errors outside (0,1)") {
    const auto spec = log_spec();
    CHECK_THROWS_AS(f1(spec, 0.0), InvalidArgument);
    CHECK_THROWS_AS(f1(spec, 1.0), InvalidArgument);
    CHECK_THROWS_AS(f1_prime(spec, -0.25), InvalidArgument);
    CHECK_THROWS_AS(f_prime(spec, 2.0), InvalidArgument);
}

TEST_CASE("f1_prime: values, antisymmetry, singular limits") {
    const auto spec = log_spec();
    CHECK(f1_prime(spec, 0.5) == 0.0);
    CHECK(f1_prime(spec, 0.9) == doctest::Approx(-f1_prime(spec, 0.1)).epsilon(1e-14));
    CHECK(f1_prime(spec, 1e-6) < -10.0);
    CHECK(f1_prime(spec, 1.0 - 1e-6) > 10.0);
    // f1'(r) = -3 at r = 1/(1+e^3); bisection oracle cross-check.
    const double root = oracle::bisect([](double r) { return oracle::log_f1p(r) + 3.0; },
                                       1e-8, 0.5);
    CHECK(root == doctest::Approx(1.0 / (1.0 + std::exp(3.0))).epsilon(1e-10));
    CHECK(f1_prime(spec, root) == doctest::Approx(-3.0).epsilon(1e-10));
}

TEST_CASE("f2 family and the bound |f2''| <= 2 lambda") {
    const auto spec = log_spec(3.0);
    CHECK(f2(spec, 0.5) == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(f2_prime(spec, 0.5) == 0.0);
    CHECK(f2_prime(spec, 0.2) == doctest::Approx(3.0 * 0.6).epsilon(1e-14));
    for (double r = 0.01; r < 1.0; r += 0.037)
        CHECK(std::abs(f2_second(spec, r)) <= 2.0 * spec.lambda + 1e-14);
    CHECK(f_prime(spec, 0.3) ==
          doctest::Approx(oracle::log_fp(0.3, 3.0)).epsilon(1e-14));
}

TEST_CASE("sup_abs_f2_prime is lambda") {
    CHECK(sup_abs_f2_prime(log_spec(3.0)) == 3.0);
    CHECK(sup_abs_f2_prime(log_spec(0.0)) == 0.0);
    CHECK(sup_abs_f2_prime(log_spec(1.0)) == 1.0);
}

TEST_CASE("lower_barrier: min rule and barrier inequality") {
    const auto spec3 = log_spec(3.0);
    const double rM = 1.0 / (1.0 + std::exp(3.0));
    CHECK(lower_barrier(spec3, 0.2) == doctest::Approx(rM).epsilon(1e-9));
    CHECK(lower_barrier(spec3, 0.01) == 0.01);  // rho0 minimum smaller than r_M

    const auto spec0 = log_spec(0.0);
    CHECK(lower_barrier(spec0, 0.4) == 0.4);  // r_M = 0.5 > rho0_min

    // Tie case rho0_min = r_M.
    CHECK(lower_barrier(spec3, rM) == doctest::Approx(rM).epsilon(1e-9));

    CHECK_THROWS_AS(lower_barrier(spec3, 0.0), InvalidArgument);
    CHECK_THROWS_AS(lower_barrier(spec3, -0.1), InvalidArgument);
    CHECK_THROWS_AS(lower_barrier(spec3, 1.0), InvalidArgument);
}

TEST_CASE("property: convexity of f1 by centered second differences") {
    const auto spec = log_spec();
    const double h = 1e-4;
    for (int k = 0; k < 1000; ++k) {
        const double r = 0.001 + (0.998 * k) / 999.0;
        const double d2 = (f1(spec, r + h) - 2.0 * f1(spec, r) + f1(spec, r - h)) / (h * h);
        CHECK(d2 > 0.0);
    }
}

TEST_CASE("property: centered difference of f1 converges at second order") {
    const auto spec = log_spec();
    const double r = 0.3;
    auto central_err = [&](double h) {
        const double approx = (f1(spec, r + h) - f1(spec, r - h)) / (2.0 * h);
        return std::abs(approx - f1_prime(spec, r));
    };
    const double ratio = central_err(1e-3) / central_err(5e-4);
    CHECK(ratio >= 3.5);
    CHECK(ratio <= 4.5);
}

TEST_CASE("property: barrier inequality over a (lambda, rho0_min) sweep") {
    for (double lambda : {0.0, 0.5, 1.0, 2.0, 3.0, 5.0, 8.0}) {
        const auto spec = log_spec(lambda);
        const double M = sup_abs_f2_prime(spec);
        for (double m : {0.01, 0.05, 0.2, 0.4, 0.7, 0.95}) {
            const double rstar = lower_barrier(spec, m);
            CHECK(rstar <= m);
            CHECK(f1_prime(spec, rstar) <= -M + 1e-12);
        }
    }
}

TEST_CASE("property: f is symmetric about 1/2") {
    const auto spec = log_spec();
    for (double r = 0.02; r < 0.5; r += 0.03)
        CHECK(f(spec, r) == doctest::Approx(f(spec, 1.0 - r)).epsilon(1e-13));
}

TEST_CASE("custom table reproduces the logarithmic potential it samples") {
    const double lambda = 3.0;
    const auto ref = log_spec(lambda);
    PotentialSpec tab;
    tab.kind = PotentialKind::custom_table;
    tab.lambda = lambda;
    const int n = 4001;
    const double a = 0.01, b = 0.99;
    for (int i = 0; i < n; ++i) {
        const double r = a + (b - a) * i / (n - 1);
        tab.table.r.push_back(r);
        tab.table.f1.push_back(f1(ref, r));
        tab.table.f1p.push_back(f1_prime(ref, r));
        tab.table.f2.push_back(f2(ref, r));
        tab.table.f2p.push_back(f2_prime(ref, r));
    }
    for (double r : {0.0123, 0.2, 0.47, 0.733, 0.981}) {
        CHECK(f1(tab, r) == doctest::Approx(f1(ref, r)).epsilon(1e-6));
        CHECK(f1_prime(tab, r) == doctest::Approx(f1_prime(ref, r)).epsilon(1e-5));
        CHECK(f2(tab, r) == doctest::Approx(f2(ref, r)).epsilon(1e-6));
        CHECK(f2_prime(tab, r) == doctest::Approx(f2_prime(ref, r)).epsilon(1e-6));
    }
    CHECK(sup_abs_f2_prime(tab) == doctest::Approx(lambda * (1.0 - 2.0 * a)).epsilon(1e-12));
    CHECK_THROWS_AS(f1(tab, 0.001), InvalidArgument);  // outside the table hull
    const double rstar = lower_barrier(tab, 0.3);
    CHECK(f1_prime(tab, rstar) <= -sup_abs_f2_prime(tab) + 1e-12);
}
