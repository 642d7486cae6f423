#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "contagion/charfn.hpp"
#include "support/fixtures.hpp"

#include <cmath>
#include <complex>

using namespace contagion;

TEST_CASE("zero arguments give phi = 1 with A = B = 0") {
    const auto p = fixtures::hawkes2_symmetric(2.0, 1.0, 1.5, 0.5);
    for (double T : {0.0, 0.5, 3.0}) {
        const CharFnResult r = riccati_solve(p, {0.0, 0.0}, {0.0, 0.0}, T);
        CHECK(std::abs(r.phi - 1.0) <= 1e-10);
        CHECK(std::abs(r.A) <= 1e-10);
        CHECK(std::abs(r.B[0]) <= 1e-10);
        CHECK(std::abs(r.B[1]) <= 1e-10);
    }
}

TEST_CASE("Poisson reduction matches the analytic characteristic function") {
    const HawkesParams p({2.0}, {1.3}, {1.3}, {0.0});
    for (double T : {1.0, 5.0}) {
        for (double u : {0.5, 1.0, 2.0}) {
            const CharFnResult r = riccati_solve(p, {u}, {0.0}, T);
            const std::complex<double> expo =
                1.3 * T * (std::exp(std::complex<double>(0.0, u)) - 1.0);
            const std::complex<double> want = std::exp(expo);
            CHECK(std::abs(r.phi - want) <= 1e-8);
        }
    }
}

TEST_CASE("T = 0 returns the initial condition exp(i v'lambda0)") {
    const auto p = fixtures::hawkes1(2.0, 1.0, 1.7, 1.0);
    const CharFnResult r = riccati_solve(p, {0.8}, {0.6}, 0.0);
    const std::complex<double> want = std::exp(std::complex<double>(0.0, 0.6 * 1.7));
    CHECK(std::abs(r.phi - want) <= 1e-14);

    const CharFnMC mc = charfn_mc(p, {0.8}, {0.6}, 0.0, 500, 1);
    CHECK(std::abs(mc.phi - want) == 0.0);
    CHECK(mc.stderr_norm() == 0.0);
}

TEST_CASE("Hermitian symmetry: phi(-u,-v) is the conjugate of phi(u,v)") {
    const HawkesParams p({2.0, 1.5}, {1.0, 0.7}, {1.2, 0.9}, {0.8, 0.3, 0.2, 0.6});
    for (double T : {0.7, 2.0}) {
        const CharFnResult pos = riccati_solve(p, {0.9, 0.4}, {0.3, -0.2}, T);
        const CharFnResult neg = riccati_solve(p, {-0.9, -0.4}, {-0.3, 0.2}, T);
        CHECK(std::abs(neg.phi - std::conj(pos.phi)) <= 1e-10);
    }
}

TEST_CASE("|phi| <= 1 for real arguments") {
    const auto p = fixtures::hawkes1(2.0, 1.0, 1.5, 1.6); // strong excitation, rho* = 0.8
    for (double u : {0.3, 1.0, 2.5}) {
        for (double T : {0.5, 2.0, 6.0}) {
            const CharFnResult r = riccati_solve(p, {u}, {0.2}, T);
            CHECK(std::abs(r.phi) <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("tolerance halving moves phi by less than ten times the tolerance") {
    const auto p = fixtures::hawkes1(2.0, 1.0, 1.5, 1.6);
    for (double tol : {1e-8, 1e-10}) {
        const CharFnResult coarse = riccati_solve(p, {1.0}, {0.4}, 3.0, tol);
        const CharFnResult fine = riccati_solve(p, {1.0}, {0.4}, 3.0, tol / 2.0);
        CHECK(std::abs(coarse.phi - fine.phi) <= 10.0 * tol);
    }
}

TEST_CASE("Monte Carlo oracle agrees with the Riccati solution" * doctest::timeout(180)) {
    const auto p = fixtures::hawkes1(2.0, 1.0, 1.0, 1.0);
    const CharFnResult rs = riccati_solve(p, {1.0}, {0.0}, 2.0);
    const CharFnMC mc = charfn_mc(p, {1.0}, {0.0}, 2.0, 40000, 2024);
    CHECK(std::abs(rs.phi - mc.phi) <= 4.0 * mc.stderr_norm() + 1e-8);

    // And with a lambda argument as well.
    const CharFnResult rs2 = riccati_solve(p, {0.5}, {0.7}, 1.5);
    const CharFnMC mc2 = charfn_mc(p, {0.5}, {0.7}, 1.5, 40000, 2025);
    CHECK(std::abs(rs2.phi - mc2.phi) <= 4.0 * mc2.stderr_norm() + 1e-8);
}

TEST_CASE("MC estimator is bit-stable across execution modes") {
    const auto p = fixtures::hawkes1(2.0, 1.0, 1.0, 1.0);
    const CharFnMC serial = charfn_mc(p, {1.0}, {0.3}, 1.0, 2000, 9, Exec::serial);
    const CharFnMC parallel = charfn_mc(p, {1.0}, {0.3}, 1.0, 2000, 9, Exec::openmp);
    CHECK(serial.phi.real() == parallel.phi.real());
    CHECK(serial.phi.imag() == parallel.phi.imag());
    CHECK(serial.stderr_re == parallel.stderr_re);
}

TEST_CASE("argument validation") {
    const auto p = fixtures::hawkes1();
    CHECK_THROWS_AS(riccati_solve(p, {1.0, 2.0}, {0.0}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(riccati_solve(p, {1.0}, {0.0}, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(charfn_mc(p, {1.0}, {0.0}, 1.0, 99, 1), std::invalid_argument);
}
