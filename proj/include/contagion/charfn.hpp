#pragma once

#include "contagion/hawkes.hpp"
#include "contagion/parallel.hpp"

#include <complex>
#include <cstdint>
#include <vector>

namespace contagion {

// Joint characteristic function E[exp(i u'N_T + i v'lambda_T)] in affine form
// phi = exp(iA + i sum_l B_l lambda_{l,0}). A and B are reported in that
// convention; internally the integration runs on (iA, iB) so no sign juggling
// touches phi.
struct CharFnResult {
    std::complex<double> A;
    std::vector<std::complex<double>> B;
    std::complex<double> phi;
    int steps = 0;
    double tol = 0.0;
};

CharFnResult riccati_solve(const HawkesParams& params, const std::vector<double>& u,
                           const std::vector<double>& v, double T, double tol = 1e-10);

struct CharFnMC {
    std::complex<double> phi;
    double stderr_re = 0.0;
    double stderr_im = 0.0;
    std::size_t paths = 0;
    // Euclidean norm of the componentwise standard errors.
    double stderr_norm() const { return std::sqrt(stderr_re * stderr_re + stderr_im * stderr_im); }
};

// Monte Carlo oracle: averages exp(i u'N_T + i v'lambda_T) over simulated
// paths. Mark laws are irrelevant to (N, lambda).
CharFnMC charfn_mc(const HawkesParams& params, const std::vector<double>& u,
                   const std::vector<double>& v, double T, std::size_t n_paths, std::uint64_t seed,
                   Exec mode = default_exec());

} // namespace contagion
