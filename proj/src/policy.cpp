#include "contagion/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace contagion {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDegenerateJz = 1e-12; // below this, the jump exposure is treated as absent

struct Atoms {
    std::vector<double> jz; // j_l * z_i
    std::vector<double> p;
};

Atoms atoms_for_class(const MarketParams& market, int l) {
    Atoms a;
    const auto zs = market.laws()[l].support();
    const auto ps = market.laws()[l].probabilities();
    a.jz.reserve(zs.size());
    a.p = ps;
    for (double z : zs) a.jz.push_back(market.j()[l] * z);
    return a;
}

std::pair<double, double> interval_from_atoms(const Atoms& a) {
    double lo = -kInf, hi = kInf;
    for (double jz : a.jz) {
        if (jz > 0.0) lo = std::max(lo, -1.0 / jz);
        if (jz < 0.0) hi = std::min(hi, -1.0 / jz);
    }
    return {lo, hi};
}

// Monotone-increasing FOC on an open interval: bracket, then Newton with
// bisection safeguard.
template <typename F, typename DF>
double monotone_root(F foc, DF dfoc, double lo, double hi, double init, double tol_abs,
                     const char* what) {
    // Reference point strictly inside the interval.
    double x0 = init;
    if (std::isfinite(lo) && !(x0 > lo)) x0 = std::isfinite(hi) ? 0.5 * (lo + hi) : lo + 1.0;
    if (std::isfinite(hi) && !(x0 < hi)) x0 = std::isfinite(lo) ? 0.5 * (lo + hi) : hi - 1.0;

    // Left bracket end: FOC < 0.
    double a = x0;
    if (std::isfinite(lo)) {
        double frac = 0.5;
        while (!(foc(a) < 0.0)) {
            a = lo + (x0 - lo) * frac;
            frac *= 0.5;
            if (frac < 1e-300) throw std::runtime_error(std::string(what) + ": failed to bracket (left)");
        }
    } else {
        double step = std::max(1.0, std::abs(x0));
        while (!(foc(a) < 0.0)) {
            a -= step;
            step *= 2.0;
            if (!std::isfinite(a)) throw std::runtime_error(std::string(what) + ": failed to bracket (left)");
        }
    }
    // Right bracket end: FOC > 0.
    double b = x0;
    if (std::isfinite(hi)) {
        double frac = 0.5;
        while (!(foc(b) > 0.0)) {
            b = hi - (hi - x0) * frac;
            frac *= 0.5;
            if (frac < 1e-300) throw std::runtime_error(std::string(what) + ": failed to bracket (right)");
        }
    } else {
        double step = std::max(1.0, std::abs(x0));
        while (!(foc(b) > 0.0)) {
            b += step;
            step *= 2.0;
            if (!std::isfinite(b)) throw std::runtime_error(std::string(what) + ": failed to bracket (right)");
        }
    }

    double x = std::clamp(x0, a, b);
    for (int it = 0; it < 200; ++it) {
        const double f = foc(x);
        if (std::abs(f) <= tol_abs) return x;
        if (f > 0.0) b = x; else a = x;
        const double d = dfoc(x);
        double next = (d > 0.0 && std::isfinite(d)) ? x - f / d : 0.5 * (a + b);
        if (!(next > a && next < b)) next = 0.5 * (a + b);
        if (next == x) return x; // bracket exhausted at machine precision
        x = next;
    }
    return x;
}

// ---- per-class objective pieces (log utility) ----

double jump_value_log(const Atoms& a, double lambda_l, double varpi) {
    if (lambda_l == 0.0) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < a.jz.size(); ++i) acc += a.p[i] * std::log1p(varpi * a.jz[i]);
    return -lambda_l * acc;
}

double jump_foc_log(const Atoms& a, double lambda_l, double varpi) {
    if (lambda_l == 0.0) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < a.jz.size(); ++i) acc += a.p[i] * a.jz[i] / (1.0 + varpi * a.jz[i]);
    return -lambda_l * acc;
}

double jump_dfoc_log(const Atoms& a, double lambda_l, double varpi) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.jz.size(); ++i) {
        const double s = 1.0 + varpi * a.jz[i];
        acc += a.p[i] * a.jz[i] * a.jz[i] / (s * s);
    }
    return lambda_l * acc;
}

struct ClassSolve {
    double varpi;
    std::string provenance;
};

void check_root(const MarketParams& market, int l, double lambda_l, double varpi,
                const std::string& provenance) {
    const double q = market.kappa1(l) / market.k();
    const double R = market.Rbar()[l];
    const Atoms a = atoms_for_class(market, l);
    const double foc = -R + q * varpi + jump_foc_log(a, lambda_l, varpi);
    const double res = std::abs(foc) / (1.0 + std::abs(R));
    if (res > 1e-10) {
        std::ostringstream os;
        os << "policy: " << provenance << " root fails FOC for class " << l << ": varpi=" << varpi
           << " residual=" << res;
        throw std::runtime_error(os.str());
    }
    if (lambda_l > 0.0) {
        // With lambda_l = 0 no jump can occur, so the constraint is vacuous
        // (and the unconstrained Merton weight may formally sit outside it).
        for (double jz : a.jz) {
            if (1.0 + varpi * jz <= 0.0) {
                std::ostringstream os;
                os << "policy: " << provenance << " root violates solvency for class " << l
                   << ": varpi=" << varpi << " jz=" << jz;
                throw std::runtime_error(os.str());
            }
        }
    }
}

ClassSolve solve_class_deterministic(const MarketParams& market, int l, double lambda_l) {
    const double q = market.kappa1(l) / market.k();
    const double R = market.Rbar()[l];
    const double zbar = std::get<DeterministicLaw>(market.laws()[l].value()).zbar;
    const double jz = market.j()[l] * zbar;
    if (lambda_l <= 0.0) return {R / q, "merton(lambda=0)"};
    if (std::abs(jz) < kDegenerateJz) return {R / q, "merton(jz~0)"};

    // FOC * (1 + varpi jz) = a varpi^2 + b varpi + c.
    const double qa = q * jz;
    const double qb = q - R * jz;
    const double qc = -(R + lambda_l * jz);
    const double disc = (q + R * jz) * (q + R * jz) + 4.0 * lambda_l * jz * jz * q;
    const double sq = std::sqrt(std::max(disc, 0.0));
    // The (-b + sqrt)/2a root; use the conjugate form when it is the stable one.
    const double varpi = (qb >= 0.0) ? (2.0 * qc) / (-qb - sq) : (-qb + sq) / (2.0 * qa);
    return {varpi, "quadratic"};
}

// Real roots of c3 x^3 + c2 x^2 + c1 x + c0, degrading gracefully when the
// leading coefficients vanish.
std::vector<double> real_roots(double c3, double c2, double c1, double c0) {
    const double scale = std::max({std::abs(c3), std::abs(c2), std::abs(c1), std::abs(c0), 1e-300});
    c3 /= scale; c2 /= scale; c1 /= scale; c0 /= scale;
    if (std::abs(c3) < 1e-14) {
        if (std::abs(c2) < 1e-14) {
            if (std::abs(c1) < 1e-300) return {};
            return {-c0 / c1};
        }
        const double disc = c1 * c1 - 4.0 * c2 * c0;
        if (disc < 0.0) return {};
        const double sq = std::sqrt(disc);
        const double r1 = (-c1 - (c1 >= 0 ? sq : -sq)) / 2.0;
        std::vector<double> out;
        out.push_back(r1 / c2);
        if (r1 != 0.0) out.push_back(c0 / r1);
        else out.push_back(0.0);
        return out;
    }
    const double b = c2 / c3, c = c1 / c3, d = c0 / c3;
    const double p = c - b * b / 3.0;
    const double qq = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    const double shift = -b / 3.0;
    const double disc = qq * qq / 4.0 + p * p * p / 27.0;
    std::vector<double> out;
    if (disc > 0.0) {
        const double sq = std::sqrt(disc);
        const double u = std::cbrt(-qq / 2.0 + sq);
        const double v = std::cbrt(-qq / 2.0 - sq);
        out.push_back(u + v + shift);
    } else if (disc == 0.0) {
        const double u = std::cbrt(-qq / 2.0);
        out.push_back(2.0 * u + shift);
        out.push_back(-u + shift);
    } else {
        const double rho = std::sqrt(-p * p * p / 27.0);
        const double theta = std::acos(std::clamp(-qq / (2.0 * rho), -1.0, 1.0));
        const double mag = 2.0 * std::sqrt(-p / 3.0);
        for (int i = 0; i < 3; ++i) {
            out.push_back(mag * std::cos((theta + 2.0 * 3.14159265358979323846 * i) / 3.0) + shift);
        }
    }
    return out;
}

ClassSolve solve_class_binomial(const MarketParams& market, int l, double lambda_l) {
    const auto& bin = std::get<BinomialLaw>(market.laws()[l].value());
    const double q = market.kappa1(l) / market.k();
    const double R = market.Rbar()[l];
    const double j = market.j()[l];
    if (lambda_l <= 0.0) return {R / q, "merton(lambda=0)"};
    // Degenerate binomials collapse to the quadratic case.
    const bool one_atom = bin.p >= 1.0 - 1e-15 || bin.p <= 1e-15 || std::abs(bin.u - bin.dn) < 1e-15;
    if (one_atom) {
        const double zbar = (bin.p <= 1e-15) ? bin.dn : bin.u;
        const double jz = j * zbar;
        if (std::abs(jz) < kDegenerateJz) return {R / q, "merton(jz~0)"};
        const double qa = q * jz, qb = q - R * jz, qc = -(R + lambda_l * jz);
        const double disc = (q + R * jz) * (q + R * jz) + 4.0 * lambda_l * jz * jz * q;
        const double sq = std::sqrt(std::max(disc, 0.0));
        const double varpi = (qb >= 0.0) ? (2.0 * qc) / (-qb - sq) : (-qb + sq) / (2.0 * qa);
        return {varpi, "quadratic(degenerate binomial)"};
    }
    const double A = j * bin.u, B = j * bin.dn;
    if (std::abs(A) < kDegenerateJz && std::abs(B) < kDegenerateJz) return {R / q, "merton(jz~0)"};

    // Clearing denominators of the FOC gives a cubic in varpi.
    const double c3 = q * A * B;
    const double c2 = q * (A + B) - R * A * B;
    const double c1 = q - R * (A + B) - lambda_l * j * (bin.p * bin.u * B + (1.0 - bin.p) * bin.dn * A);
    const double c0 = -R - lambda_l * j * (bin.p * bin.u + (1.0 - bin.p) * bin.dn);
    const Atoms a = atoms_for_class(market, l);
    const auto [lo, hi] = interval_from_atoms(a);

    std::vector<double> candidates;
    for (double root : real_roots(c3, c2, c1, c0)) {
        // One Newton polish step on the FOC itself (the cleared form loses a
        // little precision near the solvency boundary).
        const double foc = -R + q * root + jump_foc_log(a, lambda_l, root);
        const double dfoc = q + jump_dfoc_log(a, lambda_l, root);
        double polished = root;
        if (dfoc > 0.0 && std::isfinite(foc)) polished = root - foc / dfoc;
        if (!(polished > lo && polished < hi)) polished = root;
        if (polished > lo && polished < hi) candidates.push_back(polished);
    }
    if (candidates.size() != 1) {
        std::ostringstream os;
        os << "policy: cubic solver internal-consistency failure for class " << l << " (lambda="
           << lambda_l << ", roots in solvency interval: " << candidates.size() << " of "
           << real_roots(c3, c2, c1, c0).size() << ", interval (" << lo << ", " << hi << "))";
        // Strict convexity of the objective guarantees exactly one interior
        // stationary point; anything else is a solver defect, not an input error.
        if (candidates.empty()) throw std::runtime_error(os.str());
        std::sort(candidates.begin(), candidates.end());
        if (candidates.back() - candidates.front() > 1e-8 * (1.0 + std::abs(candidates.front()))) {
            throw std::runtime_error(os.str());
        }
    }
    double best = candidates.front();
    double best_res = kInf;
    for (double cnd : candidates) {
        const double res = std::abs(-R + q * cnd + jump_foc_log(a, lambda_l, cnd));
        if (res < best_res) {
            best_res = res;
            best = cnd;
        }
    }
    return {best, "cubic"};
}

ClassSolve solve_class_numeric(const MarketParams& market, int l, double lambda_l) {
    const double q = market.kappa1(l) / market.k();
    const double R = market.Rbar()[l];
    if (lambda_l <= 0.0) return {R / q, "merton(lambda=0)"};
    const Atoms a = atoms_for_class(market, l);
    double max_jz = 0.0;
    for (double jz : a.jz) max_jz = std::max(max_jz, std::abs(jz));
    if (max_jz < kDegenerateJz) return {R / q, "merton(jz~0)"};
    const auto [lo, hi] = interval_from_atoms(a);
    const auto foc = [&](double w) { return -R + q * w + jump_foc_log(a, lambda_l, w); };
    const auto dfoc = [&](double w) { return q + jump_dfoc_log(a, lambda_l, w); };
    const double init = std::isfinite(hi) ? std::min(R / q, 0.5 * hi) : R / q;
    const double root =
        monotone_root(foc, dfoc, lo, hi, init, 1e-13 * (1.0 + std::abs(R)), "log newton");
    return {root, "newton"};
}

ClassSolve solve_class_log(const MarketParams& market, int l, double lambda_l) {
    const auto& law = market.laws()[l];
    if (law.is_deterministic()) return solve_class_deterministic(market, l, lambda_l);
    if (law.is_binomial()) return solve_class_binomial(market, l, lambda_l);
    return solve_class_numeric(market, l, lambda_l);
}

void validate_lambda(const MarketParams& market, const std::vector<double>& lambda) {
    if (int(lambda.size()) != market.m()) {
        throw std::invalid_argument("policy: lambda length != m");
    }
    for (double v : lambda) {
        if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("policy: lambda must be >= 0");
    }
}

} // namespace

std::vector<double> omega_perp_star(const MarketParams& market) {
    std::vector<double> out(market.Rperp());
    for (int l = 0; l < market.m(); ++l) {
        for (int i = 0; i < market.k(); ++i) out[std::size_t(l) * market.k() + i] /= market.kappa2(l);
    }
    return out;
}

std::vector<double> merton_omega_bar(const MarketParams& market) {
    std::vector<double> out(std::size_t(market.m()));
    for (int l = 0; l < market.m(); ++l) out[l] = market.Rbar()[l] / market.kappa1(l);
    return out;
}

std::vector<double> omega_bar_deterministic(const MarketParams& market,
                                            const std::vector<double>& lambda) {
    validate_lambda(market, lambda);
    std::vector<double> out(std::size_t(market.m()));
    for (int l = 0; l < market.m(); ++l) {
        if (!market.laws()[l].is_deterministic()) {
            throw std::invalid_argument("omega_bar_deterministic: law is not deterministic");
        }
        const ClassSolve s = solve_class_deterministic(market, l, lambda[l]);
        check_root(market, l, lambda[l], s.varpi, s.provenance);
        out[l] = s.varpi / market.k();
    }
    return out;
}

std::vector<double> omega_bar_binomial(const MarketParams& market,
                                       const std::vector<double>& lambda) {
    validate_lambda(market, lambda);
    std::vector<double> out(std::size_t(market.m()));
    for (int l = 0; l < market.m(); ++l) {
        if (!market.laws()[l].is_binomial()) {
            throw std::invalid_argument("omega_bar_binomial: law is not binomial");
        }
        const ClassSolve s = solve_class_binomial(market, l, lambda[l]);
        check_root(market, l, lambda[l], s.varpi, s.provenance);
        out[l] = s.varpi / market.k();
    }
    return out;
}

std::vector<double> omega_bar_numeric(const MarketParams& market,
                                      const std::vector<double>& lambda) {
    validate_lambda(market, lambda);
    std::vector<double> out(std::size_t(market.m()));
    for (int l = 0; l < market.m(); ++l) {
        const ClassSolve s = solve_class_numeric(market, l, lambda[l]);
        check_root(market, l, lambda[l], s.varpi, s.provenance);
        out[l] = s.varpi / market.k();
    }
    return out;
}

double class_objective_log(const MarketParams& market, int l, double lambda_l, double varpi) {
    const double q = market.kappa1(l) / market.k();
    const Atoms a = atoms_for_class(market, l);
    return -varpi * market.Rbar()[l] + 0.5 * q * varpi * varpi + jump_value_log(a, lambda_l, varpi);
}

double class_foc_log(const MarketParams& market, int l, double lambda_l, double varpi) {
    const double q = market.kappa1(l) / market.k();
    const Atoms a = atoms_for_class(market, l);
    return -market.Rbar()[l] + q * varpi + jump_foc_log(a, lambda_l, varpi);
}

std::pair<double, double> solvency_interval(const MarketParams& market, int l) {
    return interval_from_atoms(atoms_for_class(market, l));
}

double K_log(const MarketParams& market, const std::vector<double>& omega,
             const std::vector<double>& lambda) {
    validate_lambda(market, lambda);
    const std::vector<double> R = market.full_returns();
    double lin = 0.0;
    for (std::size_t i = 0; i < omega.size(); ++i) lin += omega[i] * R[i];
    double val = -lin + 0.5 * market.quadratic_form_sigma(omega);
    for (int l = 0; l < market.m(); ++l) {
        if (lambda[l] == 0.0) continue;
        const double exposure = market.portfolio_jump_exposure(omega, l);
        val -= lambda[l] * market.laws()[l].expect([&](double z) { return std::log1p(exposure * z); });
    }
    return val;
}

PolicyResult solve_log_policy(const MarketParams& market, const std::vector<double>& lambda,
                              double beta) {
    validate_lambda(market, lambda);
    if (!(beta > 0.0)) throw std::invalid_argument("policy: beta must be > 0");
    PolicyResult out;
    const int m = market.m(), k = market.k();
    out.omega_bar.resize(std::size_t(m));
    out.diagnostics.resize(std::size_t(m));
    double K = 0.0;
    for (int l = 0; l < m; ++l) {
        const ClassSolve s = solve_class_log(market, l, lambda[l]);
        check_root(market, l, lambda[l], s.varpi, s.provenance);
        out.omega_bar[l] = s.varpi / k;
        auto& diag = out.diagnostics[l];
        diag.varpi = s.varpi;
        diag.provenance = s.provenance;
        diag.foc_residual =
            std::abs(class_foc_log(market, l, lambda[l], s.varpi)) / (1.0 + std::abs(market.Rbar()[l]));
        diag.objective = class_objective_log(market, l, lambda[l], s.varpi);
        K += diag.objective;
    }
    out.omega_perp = omega_perp_star(market);
    // K_perp at the optimum: -1/2 sum ||Rperp_l||^2 / kappa2_l.
    for (int l = 0; l < m; ++l) {
        double ss = 0.0;
        for (int i = 0; i < k; ++i) {
            const double v = market.Rperp()[std::size_t(l) * k + i];
            ss += v * v;
        }
        K -= 0.5 * ss / market.kappa2(l);
    }
    out.objective_K = K;
    out.omega_full.assign(std::size_t(market.n()), 0.0);
    double total = 0.0;
    for (int l = 0; l < m; ++l) {
        for (int i = 0; i < k; ++i) {
            const std::size_t idx = std::size_t(l) * k + i;
            out.omega_full[idx] = out.omega_bar[l] + out.omega_perp[idx];
            total += out.omega_full[idx];
        }
    }
    out.omega0 = 1.0 - total;
    out.consumption_rate_fraction = beta;
    return out;
}

PolicyResult two_asset_policy(const MarketParams& market, const std::vector<double>& lambda,
                              double beta) {
    if (market.n() != 2 || market.k() != 1 || market.m() != 2) {
        throw std::invalid_argument("two_asset_policy: requires n=2, k=1, m=2");
    }
    return solve_log_policy(market, lambda, beta);
}

double consumption_rate(double beta, double wealth) {
    if (!(beta > 0.0)) throw std::invalid_argument("consumption_rate: beta must be > 0");
    return beta * wealth;
}

// ---- power utility ----

namespace {

// Per-class FOC for the K^gamma stationary point, monotone increasing in
// varpi for gamma < 1 (both signs of gamma).
double jump_foc_power(const Atoms& a, double lambda_l, double gamma, double varpi) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.jz.size(); ++i) {
        if (a.jz[i] == 0.0) continue;
        acc += a.p[i] * a.jz[i] * std::pow(1.0 + varpi * a.jz[i], gamma - 1.0);
    }
    return -lambda_l * acc;
}

double jump_dfoc_power(const Atoms& a, double lambda_l, double gamma, double varpi) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.jz.size(); ++i) {
        if (a.jz[i] == 0.0) continue;
        acc += a.p[i] * a.jz[i] * a.jz[i] * std::pow(1.0 + varpi * a.jz[i], gamma - 2.0);
    }
    return lambda_l * (1.0 - gamma) * acc;
}

double solve_class_power(const MarketParams& market, int l, double lambda_l, double gamma) {
    const double q = market.kappa1(l) / market.k();
    const double R = market.Rbar()[l];
    const double merton = R / ((1.0 - gamma) * q);
    if (lambda_l <= 0.0) return merton;
    const Atoms a = atoms_for_class(market, l);
    double max_jz = 0.0;
    for (double jz : a.jz) max_jz = std::max(max_jz, std::abs(jz));
    if (max_jz < kDegenerateJz) return merton;
    const auto [lo, hi] = interval_from_atoms(a);
    const auto foc = [&](double w) {
        return -R + (1.0 - gamma) * q * w + jump_foc_power(a, lambda_l, gamma, w);
    };
    const auto dfoc = [&](double w) {
        return (1.0 - gamma) * q + jump_dfoc_power(a, lambda_l, gamma, w);
    };
    const double init = std::isfinite(hi) ? std::min(merton, 0.5 * hi) : merton;
    return monotone_root(foc, dfoc, lo, hi, init, 1e-13 * (1.0 + std::abs(R)), "power newton");
}

} // namespace

double K_power(const MarketParams& market, const std::vector<double>& omega,
               const std::vector<double>& lambda, double gamma) {
    const std::vector<double> R = market.full_returns();
    double lin = 0.0;
    for (std::size_t i = 0; i < omega.size(); ++i) lin += omega[i] * R[i];
    double val = -gamma * lin - 0.5 * gamma * (gamma - 1.0) * market.quadratic_form_sigma(omega);
    for (int l = 0; l < market.m(); ++l) {
        if (lambda[l] == 0.0) continue;
        const double exposure = market.portfolio_jump_exposure(omega, l);
        val -= lambda[l] * market.laws()[l].expect([&](double z) {
            return std::pow(1.0 + exposure * z, gamma) - 1.0;
        });
    }
    return val;
}

PowerPolicy solve_power_policy(const MarketParams& market, const std::vector<double>& lambda,
                               double gamma) {
    validate_lambda(market, lambda);
    if (gamma == 0.0 || gamma >= 1.0) {
        throw std::invalid_argument("power policy: gamma must lie in (-inf,0) or (0,1)");
    }
    PowerPolicy out;
    const int m = market.m(), k = market.k();
    out.omega_bar.resize(std::size_t(m));
    for (int l = 0; l < m; ++l) out.omega_bar[l] = solve_class_power(market, l, lambda[l], gamma) / k;
    out.omega_perp.assign(std::size_t(market.n()), 0.0);
    for (int l = 0; l < m; ++l) {
        for (int i = 0; i < k; ++i) {
            out.omega_perp[std::size_t(l) * k + i] =
                market.Rperp()[std::size_t(l) * k + i] / ((1.0 - gamma) * market.kappa2(l));
        }
    }
    out.omega_full.assign(std::size_t(market.n()), 0.0);
    for (int l = 0; l < m; ++l) {
        for (int i = 0; i < k; ++i) {
            const std::size_t idx = std::size_t(l) * k + i;
            out.omega_full[idx] = out.omega_bar[l] + out.omega_perp[idx];
        }
    }
    out.K_gamma = K_power(market, out.omega_full, lambda, gamma);
    return out;
}

// ---- exponential utility ----

namespace {

double solve_class_exponential(const MarketParams& market, int l, double lambda_l, double kappa) {
    const double q = market.kappa1(l) / market.k();
    const double R = market.Rbar()[l];
    const double merton = R / (kappa * q);
    if (lambda_l <= 0.0) return merton;
    const Atoms a = atoms_for_class(market, l);
    double max_jz = 0.0;
    for (double jz : a.jz) max_jz = std::max(max_jz, std::abs(jz));
    if (max_jz < kDegenerateJz) return merton;
    const auto foc = [&](double P) {
        double acc = 0.0;
        for (std::size_t i = 0; i < a.jz.size(); ++i) {
            if (a.jz[i] == 0.0) continue;
            acc += a.p[i] * a.jz[i] * std::exp(-kappa * P * a.jz[i]);
        }
        return -R + kappa * q * P - lambda_l * acc;
    };
    const auto dfoc = [&](double P) {
        double acc = 0.0;
        for (std::size_t i = 0; i < a.jz.size(); ++i) {
            if (a.jz[i] == 0.0) continue;
            acc += a.p[i] * a.jz[i] * a.jz[i] * std::exp(-kappa * P * a.jz[i]);
        }
        return kappa * q + lambda_l * kappa * acc;
    };
    return monotone_root(foc, dfoc, -kInf, kInf, merton, 1e-13 * (1.0 + std::abs(R)), "exp newton");
}

} // namespace

double class_varpi_log(const MarketParams& market, int l, double lambda_l) {
    return solve_class_log(market, l, lambda_l).varpi;
}

double class_varpi_power(const MarketParams& market, int l, double lambda_l, double gamma) {
    return solve_class_power(market, l, lambda_l, gamma);
}

double class_objective_power(const MarketParams& market, int l, double lambda_l, double gamma,
                             double varpi) {
    const double q = market.kappa1(l) / market.k();
    double val = -gamma * varpi * market.Rbar()[l] + 0.5 * gamma * (1.0 - gamma) * q * varpi * varpi;
    if (lambda_l != 0.0) {
        const Atoms a = atoms_for_class(market, l);
        double acc = 0.0;
        for (std::size_t i = 0; i < a.jz.size(); ++i) {
            acc += a.p[i] * (std::pow(1.0 + varpi * a.jz[i], gamma) - 1.0);
        }
        val -= lambda_l * acc;
    }
    return val;
}

double class_Pi_exponential(const MarketParams& market, int l, double lambda_l, double kappa) {
    return solve_class_exponential(market, l, lambda_l, kappa);
}

double class_objective_exponential(const MarketParams& market, int l, double lambda_l, double kappa,
                                   double Pi) {
    const double q = market.kappa1(l) / market.k();
    double val = -kappa * Pi * market.Rbar()[l] + 0.5 * kappa * kappa * q * Pi * Pi;
    if (lambda_l != 0.0) {
        const Atoms a = atoms_for_class(market, l);
        double acc = 0.0;
        for (std::size_t i = 0; i < a.jz.size(); ++i) {
            acc += a.p[i] * std::expm1(-kappa * Pi * a.jz[i]);
        }
        val += lambda_l * acc;
    }
    return val;
}

namespace {

double rperp_quadratic(const MarketParams& market) {
    double Q = 0.0;
    for (int l = 0; l < market.m(); ++l) {
        double ss = 0.0;
        for (int i = 0; i < market.k(); ++i) {
            const double v = market.Rperp()[std::size_t(l) * market.k() + i];
            ss += v * v;
        }
        Q += ss / market.kappa2(l);
    }
    return Q;
}

} // namespace

double K_perp_log_optimum(const MarketParams& market) { return -0.5 * rperp_quadratic(market); }

double K_perp_power_optimum(const MarketParams& market, double gamma) {
    return -gamma * rperp_quadratic(market) / (2.0 * (1.0 - gamma));
}

double K_perp_exponential_optimum(const MarketParams& market, double /*kappa*/) {
    return -0.5 * rperp_quadratic(market);
}

double K_exponential(const MarketParams& market, const std::vector<double>& pi,
                     const std::vector<double>& lambda, double kappa) {
    const std::vector<double> R = market.full_returns();
    double lin = 0.0;
    for (std::size_t i = 0; i < pi.size(); ++i) lin += pi[i] * R[i];
    double val = -kappa * lin + 0.5 * kappa * kappa * market.quadratic_form_sigma(pi);
    for (int l = 0; l < market.m(); ++l) {
        if (lambda[l] == 0.0) continue;
        const double exposure = market.portfolio_jump_exposure(pi, l);
        val += lambda[l] * market.laws()[l].expect([&](double z) {
            return std::expm1(-kappa * exposure * z);
        });
    }
    return val;
}

ExponentialPolicy solve_exponential_policy(const MarketParams& market,
                                           const std::vector<double>& lambda, double kappa) {
    validate_lambda(market, lambda);
    if (!(kappa > 0.0)) throw std::invalid_argument("exponential policy: kappa must be > 0");
    ExponentialPolicy out;
    const int m = market.m(), k = market.k();
    out.pi_bar.resize(std::size_t(m));
    for (int l = 0; l < m; ++l) out.pi_bar[l] = solve_class_exponential(market, l, lambda[l], kappa) / k;
    out.pi_perp.assign(std::size_t(market.n()), 0.0);
    for (int l = 0; l < m; ++l) {
        for (int i = 0; i < k; ++i) {
            out.pi_perp[std::size_t(l) * k + i] =
                market.Rperp()[std::size_t(l) * k + i] / (kappa * market.kappa2(l));
        }
    }
    out.pi_full.assign(std::size_t(market.n()), 0.0);
    for (int l = 0; l < m; ++l) {
        for (int i = 0; i < k; ++i) {
            const std::size_t idx = std::size_t(l) * k + i;
            out.pi_full[idx] = out.pi_bar[l] + out.pi_perp[idx];
        }
    }
    out.K_value = K_exponential(market, out.pi_full, lambda, kappa);
    return out;
}

} // namespace contagion
