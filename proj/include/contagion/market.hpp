#pragma once

#include "contagion/jump_law.hpp"

#include <vector>

namespace contagion {

struct ReturnsDecomposition {
    std::vector<double> Rbar;  // length m, block means
    std::vector<double> Rperp; // length n, block residuals (each block sums to 0)
};

// Split a length-n excess-return vector into class means and the orthogonal
// remainder; rebuild is exact.
ReturnsDecomposition decompose_returns(const std::vector<double>& R, int k, int m);

// Eigenstructure of the block covariance. kappa1_l carries the class-level
// (ones-direction) risk with multiplicity 1, kappa2_l the within-class
// residual risk with multiplicity k-1.
struct SpectralDecomposition {
    std::vector<double> kappa1;
    std::vector<double> kappa2;
    int m = 0;
    int k = 0;

    // Dense projectors, mostly for inspection and oracle checks.
    std::vector<double> pbar_dense(int l) const;  // (1/k) 1_l 1_l'
    std::vector<double> pperp_dense(int l) const; // M_l - (1/k) 1_l 1_l'
};

// Market with m asset classes of k assets each (n = m k):
//   - riskless rate r,
//   - block-diagonal diffusion covariance upsilon_l^2 [(1-rho_l) I + rho_l 11'],
//   - jump response J column l = j_l 1_l with per-class mark law nu_l,
//   - excess returns R = sum_l Rbar_l 1_l + Rperp.
// The (j, law) pair is normalized at construction to j_l <= 0 with support
// in [0,1]; an all-nonpositive support with j_l >= 0 is accepted and its sign
// moved into j_l.
class MarketParams {
public:
    MarketParams(double r, int m, int k, std::vector<double> upsilon, std::vector<double> rho,
                 std::vector<double> Rbar, std::vector<double> Rperp, std::vector<double> j,
                 std::vector<JumpLaw> laws);

    double r() const { return r_; }
    int m() const { return m_; }
    int k() const { return k_; }
    int n() const { return m_ * k_; }
    const std::vector<double>& upsilon() const { return upsilon_; }
    const std::vector<double>& rho() const { return rho_; }
    const std::vector<double>& Rbar() const { return Rbar_; }
    const std::vector<double>& Rperp() const { return Rperp_; }
    const std::vector<double>& j() const { return j_; }
    const std::vector<JumpLaw>& laws() const { return laws_; }

    double kappa1(int l) const { return kappa1_[l]; }
    double kappa2(int l) const { return kappa2_[l]; }

    // Full excess-return vector R (length n).
    std::vector<double> full_returns() const;

    // Dense covariance, row-major n x n. Test/oracle path; the solver paths
    // below use the spectral form only.
    std::vector<double> build_sigma() const;

    SpectralDecomposition spectral() const;

    std::vector<double> apply_sigma(const std::vector<double>& v) const;
    std::vector<double> apply_sigma_inverse(const std::vector<double>& v) const;
    std::vector<double> apply_sigma_sqrt(const std::vector<double>& v) const;

    // (omega' J)_l = j_l * sum of omega over block l.
    double portfolio_jump_exposure(const std::vector<double>& weights, int l) const;

    double quadratic_form_sigma(const std::vector<double>& v) const;

private:
    double r_ = 0.0;
    int m_ = 0;
    int k_ = 0;
    std::vector<double> upsilon_, rho_, Rbar_, Rperp_, j_;
    std::vector<JumpLaw> laws_;
    std::vector<double> kappa1_, kappa2_;
};

} // namespace contagion
