#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "contagion/policy.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

#include <cmath>
#include <random>

using namespace contagion;

namespace {

// Independent 1-D oracle: golden-section minimization of the per-class
// objective -varpi R + varpi^2 q/2 - lambda E[log(1 + varpi j z)], written
// out from scratch.
double oracle_varpi(const MarketParams& mp, int l, double lambda_l) {
    const double R = mp.Rbar()[l];
    const double q = mp.kappa1(l) / mp.k();
    const auto zs = mp.laws()[l].support();
    const auto ps = mp.laws()[l].probabilities();
    const double j = mp.j()[l];
    const auto objective = [&](double w) {
        double val = -w * R + 0.5 * q * w * w;
        if (lambda_l > 0.0) {
            double acc = 0.0;
            for (std::size_t i = 0; i < zs.size(); ++i) acc += ps[i] * std::log1p(w * j * zs[i]);
            val -= lambda_l * acc;
        }
        return std::isfinite(val) ? val : std::numeric_limits<double>::infinity();
    };
    double hi = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < zs.size(); ++i) {
        if (j * zs[i] < 0.0) hi = std::min(hi, -1.0 / (j * zs[i]));
    }
    const double lo_b = -200.0;
    const double hi_b = std::isfinite(hi) ? hi * (1.0 - 1e-13) : 200.0;
    return oracles::convex_minimize(objective, lo_b, hi_b);
}

} // namespace

TEST_CASE("omega_perp_star: zero, block division, and full-minimizer projection") {
    const MarketParams flat(0.02, 1, 2, {0.2}, {0.1}, {0.05}, {0.0, 0.0}, {-0.5},
                            {JumpLaw::deterministic(0.1)});
    const auto w0 = omega_perp_star(flat);
    CHECK(w0[0] == 0.0);
    CHECK(w0[1] == 0.0);

    // k=2, Rperp block (-0.5, 0.5), kappa2 = 0.25 -> block (-2, 2).
    const MarketParams tilt(0.02, 1, 2, {0.5}, {0.0}, {0.05}, {-0.5, 0.5}, {-0.5},
                            {JumpLaw::deterministic(0.1)});
    const auto wt = omega_perp_star(tilt);
    CHECK(wt[0] == doctest::Approx(-2.0));
    CHECK(wt[1] == doctest::Approx(2.0));

    // Projection of the full numerical minimizer of K onto the orthogonal
    // space: minimize K over (varpi, tilt e) with omega = (varpi/2 + e, varpi/2 - e).
    const std::vector<double> lambda{1.3};
    const auto pr = solve_log_policy(tilt, lambda, 0.05);
    const auto K_of = [&](double varpi, double e) {
        const std::vector<double> omega{varpi / 2.0 + e, varpi / 2.0 - e};
        return K_log(tilt, omega, lambda);
    };
    // Coordinate-wise golden search (the objective separates exactly).
    const double varpi_star = oracles::golden_minimize(
        [&](double w) { return K_of(w, 0.0); }, -50.0, 1.0 / (0.5 * 0.1) * (1 - 1e-12), 1e-13);
    const double e_star = oracles::golden_minimize(
        [&](double e) { return K_of(varpi_star, e); }, -50.0, 50.0, 1e-13);
    CHECK(pr.omega_perp[0] == doctest::Approx(e_star).epsilon(1e-8));
    CHECK(pr.omega_bar[0] * 2.0 == doctest::Approx(varpi_star).epsilon(1e-7));
}

TEST_CASE("deterministic quadratic: Merton limit at lambda = 0") {
    const auto mp = fixtures::market1(JumpLaw::deterministic(0.1), -1.0, 0.05, 0.2, 0.03);
    // kappa1 = 0.04, j zbar = -0.1: j zbar Rbar + kappa1/k = 0.035 > 0.
    const auto w = omega_bar_deterministic(mp, {0.0});
    CHECK(w[0] == doctest::Approx(1.25).epsilon(1e-12));
    CHECK(std::abs(class_foc_log(mp, 0, 0.0, w[0] * mp.k())) < 1e-12);
}

TEST_CASE("deterministic quadratic: downside jumps with no premium mean shorting") {
    const auto mp = fixtures::market1(JumpLaw::deterministic(0.2), -1.0, 0.0, 0.2, 0.03);
    const auto w = omega_bar_deterministic(mp, {1.0});
    CHECK(w[0] < 0.0);
    CHECK(std::abs(class_foc_log(mp, 0, 1.0, w[0] * mp.k())) / (1.0 + 0.0) < 1e-12);
    CHECK(w[0] == doctest::Approx(oracle_varpi(mp, 0, 1.0)).epsilon(1e-8));
}

TEST_CASE("deterministic quadratic: j -> 0 limit is continuous into the Merton branch") {
    const double merton = 0.05 / 0.04;
    for (double j : {-1e-6, -1e-9, -1e-11, -1e-13}) {
        const auto mp = fixtures::market1(JumpLaw::deterministic(1.0), j, 0.05, 0.2, 0.03);
        const auto w = omega_bar_deterministic(mp, {2.0});
        CHECK(w[0] == doctest::Approx(merton).epsilon(1e-4));
    }
    const auto zero = fixtures::market1(JumpLaw::deterministic(1.0), 0.0, 0.05, 0.2, 0.03);
    CHECK(omega_bar_deterministic(zero, {2.0})[0] == doctest::Approx(merton).epsilon(1e-14));
}

TEST_CASE("binomial cubic: degenerate cases match the quadratic") {
    const std::vector<double> lambda{1.7};
    for (auto [u, dn, p] : std::vector<std::array<double, 3>>{
             {0.3, 0.1, 1.0}, {0.3, 0.1, 0.0}, {0.25, 0.25, 0.6}}) {
        const auto bin = fixtures::market1(JumpLaw::binomial(u, dn, p), -1.0, 0.05, 0.2, 0.03);
        const double zbar = p == 0.0 ? dn : (p == 1.0 ? u : u);
        const auto det = fixtures::market1(JumpLaw::deterministic(zbar), -1.0, 0.05, 0.2, 0.03);
        const auto wb = omega_bar_binomial(bin, lambda);
        const auto wd = omega_bar_deterministic(det, lambda);
        CHECK(wb[0] == doctest::Approx(wd[0]).epsilon(1e-10));
    }
}

TEST_CASE("binomial cubic vs golden-section oracle at the quoted configuration") {
    // lambda=1, Rbar=0.05, kappa1/k=0.04, j=-1, u=0.3, dn=0.1, p=0.5.
    const auto mp = fixtures::market1(JumpLaw::binomial(0.3, 0.1, 0.5), -1.0, 0.05, 0.2, 0.03);
    const auto w = omega_bar_binomial(mp, {1.0});
    const double oracle = oracle_varpi(mp, 0, 1.0);
    CHECK(w[0] == doctest::Approx(oracle).epsilon(1e-9));
    CHECK(std::abs(class_foc_log(mp, 0, 1.0, w[0])) / 1.05 < 1e-10);
}

TEST_CASE("numeric solver: one atom matches quadratic, two atoms match cubic") {
    const std::vector<double> lambda{0.8};
    const auto one = fixtures::market1(JumpLaw::discrete({0.2}, {1.0}), -0.9, 0.04, 0.25, 0.03);
    const auto det = fixtures::market1(JumpLaw::deterministic(0.2), -0.9, 0.04, 0.25, 0.03);
    CHECK(omega_bar_numeric(one, lambda)[0] ==
          doctest::Approx(omega_bar_deterministic(det, lambda)[0]).epsilon(1e-10));

    const auto two =
        fixtures::market1(JumpLaw::discrete({0.3, 0.1}, {0.5, 0.5}), -1.0, 0.05, 0.2, 0.03);
    const auto bin = fixtures::market1(JumpLaw::binomial(0.3, 0.1, 0.5), -1.0, 0.05, 0.2, 0.03);
    CHECK(omega_bar_numeric(two, lambda)[0] ==
          doctest::Approx(omega_bar_binomial(bin, lambda)[0]).epsilon(1e-9));

    CHECK(omega_bar_numeric(two, {0.0})[0] == doctest::Approx(0.05 / 0.04).epsilon(1e-12));
}

TEST_CASE("uniqueness: five spread starting points give the same root") {
    const auto mp =
        fixtures::market1(JumpLaw::discrete({0.4, 0.2, 0.05}, {0.3, 0.4, 0.3}), -0.8, 0.06,
                          0.18, 0.03);
    // The library solver has no user-facing start, so probe by restarting the
    // oracle from disjoint brackets around the root.
    const double root = omega_bar_numeric(mp, {1.5})[0];
    const double hi = 1.0 / (0.8 * 0.4);
    for (double frac : {0.05, 0.25, 0.5, 0.75, 0.95}) {
        const double probe = oracles::convex_minimize(
            [&](double w) {
                double acc = 0.0;
                const auto zs = mp.laws()[0].support();
                const auto ps = mp.laws()[0].probabilities();
                for (std::size_t i = 0; i < zs.size(); ++i) {
                    acc += ps[i] * std::log1p(w * -0.8 * zs[i]);
                }
                const double val = -w * 0.06 + 0.5 * (0.18 * 0.18) * w * w - 1.5 * acc;
                return std::isfinite(val) ? val : std::numeric_limits<double>::infinity();
            },
            -(10.0 + 190.0 * frac), hi * (1.0 - 1e-13));
        CHECK(probe == doctest::Approx(root).epsilon(1e-8));
    }
}

TEST_CASE("flight to quality: omega_bar decreasing in lambda for downside jumps") {
    const auto mp = fixtures::market1(JumpLaw::deterministic(0.15), -1.0, 0.05, 0.2, 0.03);
    double prev = omega_bar_deterministic(mp, {0.0})[0];
    for (double lam = 0.25; lam <= 8.0; lam += 0.25) {
        const double cur = omega_bar_deterministic(mp, {lam})[0];
        CHECK(cur < prev);
        prev = cur;
    }
}

TEST_CASE("consumption rate") {
    CHECK(consumption_rate(0.02, 100.0) == doctest::Approx(2.0));
    CHECK(consumption_rate(0.02, 0.0) == 0.0);
    CHECK(consumption_rate(0.03, 2.0 * 7.0) == doctest::Approx(2.0 * consumption_rate(0.03, 7.0)));
    CHECK_THROWS_AS(consumption_rate(0.0, 1.0), std::invalid_argument);
}

TEST_CASE("budget identity and diagnostics in the assembled policy") {
    const auto mp = fixtures::market2(JumpLaw::deterministic(0.15), JumpLaw::deterministic(0.12));
    const auto pr = solve_log_policy(mp, {1.2, 0.7}, 0.03);
    double total = pr.omega0;
    for (double w : pr.omega_full) total += w;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(pr.consumption_rate_fraction == doctest::Approx(0.03));
    for (const auto& d : pr.diagnostics) CHECK(d.foc_residual < 1e-10);
    // K at the reported optimum matches the direct evaluation.
    CHECK(pr.objective_K == doctest::Approx(K_log(mp, pr.omega_full, {1.2, 0.7})).epsilon(1e-12));
}

TEST_CASE("two-asset wrapper equals the general path and respects symmetry") {
    const auto mp = fixtures::market2(JumpLaw::deterministic(0.15), JumpLaw::deterministic(0.12));
    const auto a = two_asset_policy(mp, {1.0, 2.0}, 0.03);
    const auto b = solve_log_policy(mp, {1.0, 2.0}, 0.03);
    CHECK(a.omega_bar[0] == b.omega_bar[0]);
    CHECK(a.omega_bar[1] == b.omega_bar[1]);

    const MarketParams sym(0.02, 2, 1, {0.2, 0.2}, {0.0, 0.0}, {0.05, 0.05}, {0.0, 0.0},
                           {-1.0, -1.0},
                           {JumpLaw::deterministic(0.15), JumpLaw::deterministic(0.15)});
    const auto s = two_asset_policy(sym, {1.0, 1.0}, 0.03);
    CHECK(s.omega_bar[0] == doctest::Approx(s.omega_bar[1]).epsilon(1e-14));

    const auto wrong = fixtures::market1(JumpLaw::deterministic(0.1));
    CHECK_THROWS_AS(two_asset_policy(wrong, {1.0}, 0.03), std::invalid_argument);
}

TEST_CASE("flight to quality after an excitation in either class") {
    const auto mp = fixtures::market2(JumpLaw::deterministic(0.15), JumpLaw::deterministic(0.12));
    const std::vector<double> lambda{1.2, 1.2};
    const auto before = two_asset_policy(mp, lambda, 0.03);
    // A class-1 event bumps both intensities by column 1 of d.
    const std::vector<double> excited{lambda[0] + 0.6, lambda[1] + 0.45};
    const auto after = two_asset_policy(mp, excited, 0.03);
    CHECK(after.omega_bar[0] < before.omega_bar[0]);
    CHECK(after.omega_bar[1] < before.omega_bar[1]);
}

TEST_CASE("random configurations: closed forms vs oracle, all law types") {
    std::mt19937_64 rng(20240803);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int rep = 0; rep < 60; ++rep) {
        const double upsilon = 0.1 + 0.4 * u01(rng);
        const double Rbar = 0.01 + 0.1 * u01(rng);
        const double j = -(0.2 + 0.8 * u01(rng));
        const int kind = rep % 3;
        JumpLaw law = JumpLaw::deterministic(0.05 + 0.4 * u01(rng));
        if (kind == 1) {
            const double a = 0.05 + 0.4 * u01(rng);
            const double b = 0.05 + 0.4 * u01(rng);
            law = JumpLaw::binomial(std::max(a, b), std::min(a, b), 0.1 + 0.8 * u01(rng));
        } else if (kind == 2) {
            law = JumpLaw::discrete({0.05 + 0.2 * u01(rng), 0.3 + 0.2 * u01(rng), 0.6},
                                    {0.3, 0.5, 0.2});
        }
        const auto mp = fixtures::market1(law, j, Rbar, upsilon, 0.02);
        const double lambda = 5.0 * u01(rng);
        const auto pr = solve_log_policy(mp, {lambda}, 0.05);
        const double oracle = oracle_varpi(mp, 0, lambda);
        CHECK(pr.omega_bar[0] == doctest::Approx(oracle).epsilon(5e-8));
        CHECK(pr.diagnostics[0].foc_residual < 1e-10);
    }
}
