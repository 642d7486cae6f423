#pragma once

#include "contagion/hawkes.hpp"

#include <string>
#include <vector>

namespace contagion {

// Empirical counterpart of the counting processes: per-class event times in
// year fractions, with optional standardized-magnitude marks.
struct EventStream {
    std::vector<std::vector<double>> times; // strictly increasing within each class
    std::vector<std::vector<double>> marks; // |return| / rolling sigma, aligned with times
    double horizon = 0.0;                   // end of the data range (year fraction)

    int m() const { return int(times.size()); }
    void validate() const;
};

struct DetectOptions {
    int window = 60;            // trailing observations for the rolling sigma
    double threshold = 3.0;     // sigma multiples
    bool negative_only = true;  // count only downside moves
    double periods_per_year = 252.0;
};

// Rolling-sigma threshold rule: observation i of class l is an event when
// return_i < -threshold * sigma_hat_i (or |return_i| > threshold * sigma_hat_i
// with negative_only=false); sigma_hat_i is the standard deviation of the
// trailing `window` observations, the current one excluded.
EventStream detect_jumps(const std::vector<std::vector<double>>& returns_per_class,
                         const DetectOptions& opt);

struct IntensityTrajectory {
    std::vector<double> times;
    std::vector<std::vector<double>> lambda;  // [time][class], right-continuous
    std::vector<std::vector<int>> event_mark; // [time][class], 1 at event rows
};

// lambda_l(t) from the integrated form, computed by the O(events)
// decay-and-bump recursion on the union of the uniform grid and event times.
IntensityTrajectory filter_intensity(const EventStream& events, const HawkesParams& params,
                                     double grid_dt);

struct MleOptions {
    int max_iters = 400;
    double grad_tol = 1e-7; // on the squashed-gradient sup norm, relative to 1 + |loglik|
    // Box bounds; empty = defaults (alpha [1e-2,1e3], lambda_inf [1e-8,1e3], d [0,1e3]).
    std::vector<double> lower, upper; // layout: alpha (m), lambda_inf (m), d (m*m row-major)
};

struct MleResult {
    HawkesParams params; // lambda0 pinned to lambda_inf
    double loglik = 0.0;
    bool converged = false;
    int iterations = 0;
    // Observed-information standard errors, same layout as the parameter vector.
    std::vector<double> stderr_alpha, stderr_lambda_inf, stderr_d;
};

// Maximum likelihood over (alpha, lambda_inf, d) with lambda0 = lambda_inf:
// log L = sum_l [ sum_{events} log lambda_l(t-) - int_0^T lambda_l ], the
// compensator in closed form, analytic gradients, BFGS on box-squashed
// coordinates.
MleResult calibrate_mle(const EventStream& events, double horizon, const HawkesParams& init,
                        const MleOptions& opt = {});

// Point-process log-likelihood at given parameters (lambda0 as supplied).
double hawkes_loglik(const EventStream& events, double horizon, const HawkesParams& params);

} // namespace contagion
