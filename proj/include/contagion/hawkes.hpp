#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace contagion {

// Stability report for the excitation system. The operative test is the
// spectral radius of the matrix with entries d_lj / alpha_l: strictly below
// one, the intensity process is stationary with bounded moments.
struct StationarityReport {
    std::vector<double> gamma;          // row-major m x m, Gamma = diag(alpha) - d
    double spectral_radius = 0.0;       // rho( diag(alpha)^{-1} d )
    bool is_stationary = false;         // spectral_radius < 1
    bool gamma_nonsingular = false;
};

// Mutually exciting intensity system
//   dlambda_l = alpha_l (lambda_inf_l - lambda_l) dt + sum_j d_lj dN_j.
// Immutable once constructed; construction rejects sign violations and
// stores the stationarity report.
class HawkesParams {
public:
    HawkesParams(std::vector<double> alpha,
                 std::vector<double> lambda_inf,
                 std::vector<double> lambda0,
                 std::vector<double> d_row_major);

    int m() const { return m_; }
    const std::vector<double>& alpha() const { return alpha_; }
    const std::vector<double>& lambda_inf() const { return lambda_inf_; }
    const std::vector<double>& lambda0() const { return lambda0_; }
    const std::vector<double>& d() const { return d_; }
    double d(int l, int j) const { return d_[std::size_t(l) * m_ + j]; }
    // Column j of d: the intensity bump applied to every class when class j fires.
    std::vector<double> d_column(int j) const;

    const StationarityReport& stationarity() const { return report_; }
    bool is_stationary() const { return report_.is_stationary; }

    // Steady state of the first-moment ODE, Gamma lambda_bar = diag(alpha) lambda_inf.
    // Note this is Gamma^{-1} diag(alpha) lambda_inf, not the first-order
    // truncation (I - diag(alpha)^{-1} d) lambda_inf sometimes quoted; the
    // long-run simulation checks in the test suite pin the former.
    // Throws if the system is not stationary.
    std::vector<double> stationary_mean() const;

private:
    int m_ = 0;
    std::vector<double> alpha_, lambda_inf_, lambda0_, d_;
    StationarityReport report_;
};

StationarityReport check_stationarity(const HawkesParams& params);

// Joint state of (counts, intensities) at one instant.
struct IntensityState {
    double t = 0.0;
    std::vector<double> lambda;
    std::vector<std::int64_t> counts;
};

IntensityState initial_state(const HawkesParams& params);

// Relaxation between events: lambda_l(t+dt) = lambda_inf_l + (lambda_l - lambda_inf_l) e^{-alpha_l dt}.
IntensityState decay(const IntensityState& state, double dt, const HawkesParams& params);

// An event in class j (0-based): lambda += d column j, counts_j += 1, time unchanged.
IntensityState excite(const IntensityState& state, int j, const HawkesParams& params);

using StateFunction =
    std::function<double(const std::vector<std::int64_t>& counts, const std::vector<double>& lambda)>;

// Markov generator applied to g at (counts, lambda):
//   sum_l [ alpha_l (lambda_inf_l - lambda_l) dg/dlambda_l
//           + lambda_l ( g(counts + e_l, lambda + d_l) - g(counts, lambda) ) ].
// dg/dlambda uses central differences with step 1e-6 * max(1, |lambda_l|)
// unless analytic partials are supplied.
double generator_apply(const HawkesParams& params, const StateFunction& g,
                       const std::vector<std::int64_t>& counts, const std::vector<double>& lambda,
                       const std::vector<double>* analytic_dlambda = nullptr);

} // namespace contagion
