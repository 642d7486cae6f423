#pragma once

#include "contagion/hawkes.hpp"
#include "contagion/market.hpp"
#include "contagion/parallel.hpp"
#include "contagion/policy.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace contagion {

struct UtilitySpec {
    enum class Kind { log_utility, power, exponential };
    Kind kind = Kind::log_utility;
    double beta = 0.0;  // impatience
    double gamma = 0.0; // power exponent in (-inf,0)u(0,1), or exponential risk aversion > 0

    static UtilitySpec log_u(double beta);
    static UtilitySpec power_u(double beta, double gamma);
    static UtilitySpec exponential_u(double beta, double gamma);

    // kappa = r * gamma for the exponential investor, by the HJB consistency
    // condition.
    double kappa(double r) const;
    std::string kind_name() const;
    void validate() const;
};

// Rectangular lattice over a box in intensity space, row-major flattening
// with the last axis fastest.
struct GridSpec {
    std::vector<double> lo, hi;
    std::vector<int> count;

    int dims() const { return int(lo.size()); }
    std::size_t total() const;
    double step(int axis) const;
    double coord(int axis, int idx) const;
    std::vector<int> unflatten(std::size_t flat) const;
    std::size_t flatten(const std::vector<int>& idx) const;
    std::vector<double> node(std::size_t flat) const;
    void validate() const;
};

// Default box per axis: [max(lambda_bar - 4 sd, eps), lambda_bar + 8 sd],
// widened so that lambda_inf and every point lambda_inf + (up to 3) columns
// of d stays inside. The stationary sd comes from one long simulated path.
GridSpec default_grid_box(const HawkesParams& params, int points_per_axis, std::uint64_t seed);

struct ValueField {
    GridSpec grid;
    std::vector<double> values;
    std::vector<double> stderrs; // zero when the field is deterministic
    UtilitySpec utility;
    std::size_t mc_paths = 0;
    double mc_horizon = 0.0;
    std::uint64_t mc_seed = 0;

    // Multilinear interpolation, clamped to the box (clamped flag reported).
    double interpolate(const std::vector<double>& lambda, bool* clamped = nullptr) const;
    // Interpolation stencil: flat node indices and weights.
    void stencil(const std::vector<double>& lambda, std::vector<std::size_t>& nodes,
                 std::vector<double>& weights, bool* clamped = nullptr) const;
};

// Nonhomogeneous term of the log-utility equation:
//   F(lambda) = 1 - r/beta - log(beta) + K(omega*(lambda), lambda) / beta.
double F_of_lambda(const MarketParams& market, double beta, const std::vector<double>& lambda);

struct FeynmanKacResult {
    double value = 0.0;
    double stderr_ = 0.0;
    double trunc_bound = 0.0; // e^{-beta T} sup|F| / beta over the reference box
    double t_max = 0.0;
    std::size_t paths = 0;
};

struct FeynmanKacOptions {
    double t_max = 0.0;     // <= 0: choose from tol_tail
    double tol_tail = 1e-6; // absolute truncation tolerance on the tail
    double dt = 0.02;       // trapezoid grid between events
    std::size_t paths = 4000;
    std::uint64_t seed = 1;
    Exec mode = default_exec();
};

// f(lambda0) = int_0^inf e^{-beta s} E[F(lambda_s)] ds by path simulation,
// trapezoid on the event-augmented grid, truncated at t_max with an explicit
// tail bound. Throws when the requested t_max cannot meet tol_tail, naming
// the required horizon.
FeynmanKacResult f_feynman_kac(const MarketParams& market, const HawkesParams& hawkes, double beta,
                               const std::vector<double>& lambda0, const FeynmanKacOptions& opt);

// Generic Feynman-Kac workhorse: mean and stderr of
// int_0^{t_max} e^{-disc s} fn(lambda_s) ds over intensity paths from lambda0.
MeanStderr discounted_integral_mc(const HawkesParams& hawkes, const std::vector<double>& lambda0,
                                  double disc, double t_max, double dt, std::size_t paths,
                                  std::uint64_t seed, Exec mode,
                                  const std::function<double(const std::vector<double>&)>& fn);

// f tabulated over a grid, with the per-path discounted integrals retained
// (node-major) so downstream linear functionals carry exact MC error bars.
// Paths share substreams across nodes (common random numbers).
struct FieldWithPaths {
    ValueField field;
    std::vector<std::vector<double>> per_path; // [node][path]
    double trunc_bound = 0.0;
    double t_max = 0.0;
};

FieldWithPaths f_field_log(const MarketParams& market, const HawkesParams& hawkes, double beta,
                           const GridSpec& grid, const FeynmanKacOptions& opt);

// Residual of the equation the Feynman-Kac integral satisfies,
// (beta - A)f = F, reported as A f - beta f + F over interior nodes. The
// budget combines 3x the exact per-node MC standard error of the residual
// (from the per-path values), a finite-difference truncation term, and an
// interpolation term for f(lambda + d_l).
struct ResidualReport {
    std::vector<std::size_t> interior;  // flat node indices
    std::vector<double> residual;       // aligned with interior
    std::vector<double> budget;
    double pass_fraction = 0.0;
};

ResidualReport hjb_residual_log(const MarketParams& market, const HawkesParams& hawkes, double beta,
                                const FieldWithPaths& f);

struct TransversalityRow {
    double t = 0.0;
    double estimate = 0.0;
    double stderr_ = 0.0;
};

struct TransversalityReport {
    std::vector<TransversalityRow> rows;
    bool decays_to_zero = false; // |last| <= 3 stderr
    double ruin_fraction = 0.0;
    bool ruin_warning = false; // ruin fraction > 1%
};

struct TransversalityOptions {
    std::vector<double> t_grid;
    double x0 = 1.0;
    double dt = 0.02;
    std::size_t paths = 2000;
    std::uint64_t seed = 7;
    Exec mode = default_exec();
    bool log_space = false; // exact-GBM wealth stepping between jumps
};

// E[e^{-beta t}(f(lambda_t) + log(X*_t)/beta)] along the optimal policy.
TransversalityReport transversality_check(const MarketParams& market, const HawkesParams& hawkes,
                                          double beta, const ValueField& f_field,
                                          const TransversalityOptions& opt);

// ---- power / exponential fixed point ----

struct IterationRecord {
    int iter = 0;
    double sup_change = 0.0;     // sup |g_i - g_{i-1}|
    double sup_rel_change = 0.0; // relative to sup |g_{i-1}|
    bool contraction = false;    // sup_change decreased vs previous iteration
};

struct FixedPointOptions {
    int max_iters = 50;
    double tol = 1e-6; // sup-norm relative change
    double tol_tail = 1e-5;
    double t_max = 0.0; // <= 0: derived from tol_tail at the initial iterate
    double dt = 0.05;
    std::size_t paths = 1500;
    std::uint64_t seed = 11;
    Exec mode = default_exec();
    bool start_from_merton = false; // exponential default; power starts from g = 1
};

struct FixedPointResult {
    ValueField g;
    std::vector<IterationRecord> iterations;
    bool converged = false; // tol reached with >= 3 consecutive contractions
    double t_max = 0.0;
    // Final-iterate diagnostics on the grid nodes:
    std::vector<std::vector<double>> h_grid;         // distorted intensities per node
    std::vector<std::vector<double>> weight_grid;    // omega_bar (power) or pi_bar (exponential)
    std::vector<double> consumption_grid;            // per-node consumption coefficient
};

// g = G(g) iteration for the power investor. G(lambda; g) =
// (1-gamma) g^{gamma/(gamma-1)} - g K^gamma(omega*(h(lambda)), h(lambda)),
// discount beta - r gamma; h_l = lambda_l g(lambda+d_l)/g(lambda).
FixedPointResult g_fixed_point_power(const MarketParams& market, const HawkesParams& hawkes,
                                     const UtilitySpec& utility, const GridSpec& grid,
                                     const FixedPointOptions& opt);

// Exponential investor in dollar amounts, kappa = r gamma enforced; discount
// beta - r + r log(r gamma); G(lambda; g) = g [K(pi*(h), h) - r log g].
// consumption_grid holds the wealth-independent part of
// C* = r x + (-log g - log kappa)/gamma.
FixedPointResult g_fixed_point_exponential(const MarketParams& market, const HawkesParams& hawkes,
                                           const UtilitySpec& utility, const GridSpec& grid,
                                           const FixedPointOptions& opt);

} // namespace contagion
