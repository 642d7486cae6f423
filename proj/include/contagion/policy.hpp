#pragma once

#include "contagion/market.hpp"

#include <string>
#include <vector>

namespace contagion {

struct ClassRootDiagnostics {
    double varpi = 0.0;        // k * omega_bar_l, the per-class FOC variable
    double foc_residual = 0.0; // |FOC| / (1 + |Rbar_l|)
    double objective = 0.0;    // per-class reduced objective at the root
    std::string provenance;    // which solver / branch produced the root
};

struct PolicyResult {
    std::vector<double> omega_bar;  // length m, class-level weights
    std::vector<double> omega_perp; // length n, within-class tilt
    std::vector<double> omega_full; // length n
    double omega0 = 0.0;            // riskless weight, 1 - sum(omega_full)
    double consumption_rate_fraction = 0.0; // beta for the log investor
    double objective_K = 0.0;               // K(omega*, lambda)
    std::vector<ClassRootDiagnostics> diagnostics;
};

// omega_perp depends only on the diffusive characteristics: block l equals
// Rperp_l / kappa2_l.
std::vector<double> omega_perp_star(const MarketParams& market);

// Merton weights (lambda = 0 or j = 0): omega_bar_l = Rbar_l / kappa1_l.
std::vector<double> merton_omega_bar(const MarketParams& market);

// Closed-form class weights for deterministic marks (quadratic FOC), binomial
// marks (cubic FOC), and the safeguarded-Newton solver for any finite law.
std::vector<double> omega_bar_deterministic(const MarketParams& market,
                                            const std::vector<double>& lambda);
std::vector<double> omega_bar_binomial(const MarketParams& market,
                                       const std::vector<double>& lambda);
std::vector<double> omega_bar_numeric(const MarketParams& market,
                                      const std::vector<double>& lambda);

// Full log-utility policy at intensities lambda: dispatches per class on the
// law type, assembles omega, and evaluates K at the optimum.
PolicyResult solve_log_policy(const MarketParams& market, const std::vector<double>& lambda,
                              double beta);

// Convenience wrapper for the n=2, k=1, m=2 market; identical to the general path.
PolicyResult two_asset_policy(const MarketParams& market, const std::vector<double>& lambda,
                              double beta);

double consumption_rate(double beta, double wealth);

// Log-utility objective K(omega, lambda) for arbitrary weights.
double K_log(const MarketParams& market, const std::vector<double>& omega,
             const std::vector<double>& lambda);

// Per-class reduced objective/FOC in varpi = k * omega_bar_l.
double class_objective_log(const MarketParams& market, int l, double lambda_l, double varpi);
double class_foc_log(const MarketParams& market, int l, double lambda_l, double varpi);

// Open interval of varpi keeping 1 + varpi j_l z > 0 for every support atom.
std::pair<double, double> solvency_interval(const MarketParams& market, int l);

// Allocation-light per-class entry points for hot loops (path integrals over
// intensity space). Each returns the per-class FOC root varpi.
double class_varpi_log(const MarketParams& market, int l, double lambda_l);
double class_varpi_power(const MarketParams& market, int l, double lambda_l, double gamma);
double class_objective_power(const MarketParams& market, int l, double lambda_l, double gamma,
                             double varpi);
double class_Pi_exponential(const MarketParams& market, int l, double lambda_l, double kappa);
double class_objective_exponential(const MarketParams& market, int l, double lambda_l, double kappa,
                                   double Pi);

// Constant orthogonal contributions to the optimized objectives.
double K_perp_log_optimum(const MarketParams& market);                       // -Q/2
double K_perp_power_optimum(const MarketParams& market, double gamma);       // -gamma Q/(2(1-gamma))
double K_perp_exponential_optimum(const MarketParams& market, double kappa); // -Q/2

// ---- power utility (weights) ----

struct PowerPolicy {
    std::vector<double> omega_bar;
    std::vector<double> omega_perp;
    std::vector<double> omega_full;
    double K_gamma = 0.0; // K^gamma at the optimizer
};

// Optimizer of K^gamma at intensities lambda (minimum for gamma in (0,1),
// maximum for gamma < 0; both are the unique stationary point).
PowerPolicy solve_power_policy(const MarketParams& market, const std::vector<double>& lambda,
                               double gamma);
double K_power(const MarketParams& market, const std::vector<double>& omega,
               const std::vector<double>& lambda, double gamma);

// ---- exponential utility (dollar amounts) ----

struct ExponentialPolicy {
    std::vector<double> pi_bar;  // m, class-level dollar positions per asset
    std::vector<double> pi_perp; // n
    std::vector<double> pi_full; // n
    double K_value = 0.0;        // K(pi*, lambda)
};

ExponentialPolicy solve_exponential_policy(const MarketParams& market,
                                           const std::vector<double>& lambda, double kappa);
double K_exponential(const MarketParams& market, const std::vector<double>& pi,
                     const std::vector<double>& lambda, double kappa);

} // namespace contagion
