#include "contagion/market.hpp"

#include <cmath>
#include <stdexcept>

namespace contagion {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

} // namespace

ReturnsDecomposition decompose_returns(const std::vector<double>& R, int k, int m) {
    require(k >= 1 && m >= 1, "decompose_returns: k and m must be >= 1");
    require(int(R.size()) == k * m, "decompose_returns: length mismatch, expected n = m*k");
    ReturnsDecomposition out;
    out.Rbar.assign(std::size_t(m), 0.0);
    out.Rperp.assign(R.size(), 0.0);
    for (int l = 0; l < m; ++l) {
        double sum = 0.0;
        for (int i = 0; i < k; ++i) sum += R[std::size_t(l) * k + i];
        out.Rbar[l] = sum / k;
        for (int i = 0; i < k; ++i) {
            out.Rperp[std::size_t(l) * k + i] = R[std::size_t(l) * k + i] - out.Rbar[l];
        }
    }
    return out;
}

std::vector<double> SpectralDecomposition::pbar_dense(int l) const {
    const int n = m * k;
    std::vector<double> P(std::size_t(n) * n, 0.0);
    for (int a = 0; a < k; ++a) {
        for (int b = 0; b < k; ++b) {
            P[std::size_t(l * k + a) * n + (l * k + b)] = 1.0 / k;
        }
    }
    return P;
}

std::vector<double> SpectralDecomposition::pperp_dense(int l) const {
    const int n = m * k;
    std::vector<double> P(std::size_t(n) * n, 0.0);
    for (int a = 0; a < k; ++a) {
        for (int b = 0; b < k; ++b) {
            P[std::size_t(l * k + a) * n + (l * k + b)] = (a == b ? 1.0 : 0.0) - 1.0 / k;
        }
    }
    return P;
}

MarketParams::MarketParams(double r, int m, int k, std::vector<double> upsilon,
                           std::vector<double> rho, std::vector<double> Rbar,
                           std::vector<double> Rperp, std::vector<double> j,
                           std::vector<JumpLaw> laws)
    : r_(r),
      m_(m),
      k_(k),
      upsilon_(std::move(upsilon)),
      rho_(std::move(rho)),
      Rbar_(std::move(Rbar)),
      Rperp_(std::move(Rperp)),
      j_(std::move(j)),
      laws_(std::move(laws)) {
    require(std::isfinite(r_) && r_ >= 0.0, "market: r must be >= 0");
    require(m_ >= 1 && k_ >= 1, "market: m and k must be >= 1");
    const int n = m_ * k_;
    require(int(upsilon_.size()) == m_, "market: upsilon length != m");
    require(int(rho_.size()) == m_, "market: rho length != m");
    require(int(Rbar_.size()) == m_, "market: Rbar length != m");
    require(int(Rperp_.size()) == n, "market: Rperp length != n = m*k");
    require(int(j_.size()) == m_, "market: j length != m");
    require(int(laws_.size()) == m_, "market: laws length != m");

    kappa1_.assign(std::size_t(m_), 0.0);
    kappa2_.assign(std::size_t(m_), 0.0);
    for (int l = 0; l < m_; ++l) {
        require(std::isfinite(upsilon_[l]) && upsilon_[l] > 0.0, "market: upsilon must be > 0");
        if (k_ > 1) {
            require(rho_[l] > -1.0 / (k_ - 1) && rho_[l] < 1.0,
                    "market: rho must lie in (-1/(k-1), 1)");
        } else {
            require(rho_[l] < 1.0, "market: rho must be < 1");
        }
        kappa1_[l] = upsilon_[l] * upsilon_[l] * (1.0 + (k_ - 1) * rho_[l]);
        kappa2_[l] = upsilon_[l] * upsilon_[l] * (1.0 - rho_[l]);
        require(kappa1_[l] > 0.0 && kappa2_[l] > 0.0, "market: covariance eigenvalues must be > 0");

        double block_sum = 0.0;
        for (int i = 0; i < k_; ++i) block_sum += Rperp_[std::size_t(l) * k_ + i];
        require(std::abs(block_sum) <= 1e-12 * std::max(1.0, std::abs(block_sum)) ||
                    std::abs(block_sum) <= 1e-12,
                "market: each Rperp block must sum to 0 within 1e-12");

        // Normalize the jump sign convention: all-nonpositive marks fold their
        // sign into j_l so that canonically j_l <= 0 and support lies in [0,1].
        bool any_neg = false, any_pos = false;
        for (double z : laws_[l].support()) {
            any_neg = any_neg || z < 0.0;
            any_pos = any_pos || z > 0.0;
        }
        if (any_neg && !any_pos) {
            laws_[l] = laws_[l].negated();
            j_[l] = -j_[l];
        }
        require(std::isfinite(j_[l]) && j_[l] >= -1.0 && j_[l] <= 0.0,
                "market: jump scaling j must lie in [-1, 0] after sign normalization");
    }
}

std::vector<double> MarketParams::full_returns() const {
    std::vector<double> R(Rperp_);
    for (int l = 0; l < m_; ++l) {
        for (int i = 0; i < k_; ++i) R[std::size_t(l) * k_ + i] += Rbar_[l];
    }
    return R;
}

std::vector<double> MarketParams::build_sigma() const {
    const int n = this->n();
    std::vector<double> S(std::size_t(n) * n, 0.0);
    for (int l = 0; l < m_; ++l) {
        const double v2 = upsilon_[l] * upsilon_[l];
        for (int a = 0; a < k_; ++a) {
            for (int b = 0; b < k_; ++b) {
                S[std::size_t(l * k_ + a) * n + (l * k_ + b)] = v2 * (a == b ? 1.0 : rho_[l]);
            }
        }
    }
    return S;
}

SpectralDecomposition MarketParams::spectral() const {
    SpectralDecomposition sd;
    sd.kappa1 = kappa1_;
    sd.kappa2 = kappa2_;
    sd.m = m_;
    sd.k = k_;
    return sd;
}

namespace {

template <typename Scale>
std::vector<double> apply_blockwise(const MarketParams& mp, const std::vector<double>& v,
                                    Scale&& scale) {
    const int m = mp.m(), k = mp.k();
    if (int(v.size()) != m * k) throw std::invalid_argument("market: vector length != n");
    std::vector<double> out(v.size());
    for (int l = 0; l < m; ++l) {
        double mean = 0.0;
        for (int i = 0; i < k; ++i) mean += v[std::size_t(l) * k + i];
        mean /= k;
        const auto [c1, c2] = scale(l);
        for (int i = 0; i < k; ++i) {
            const double vi = v[std::size_t(l) * k + i];
            out[std::size_t(l) * k + i] = c1 * mean + c2 * (vi - mean);
        }
    }
    return out;
}

} // namespace

std::vector<double> MarketParams::apply_sigma(const std::vector<double>& v) const {
    return apply_blockwise(*this, v, [&](int l) {
        return std::pair<double, double>(kappa1_[l], kappa2_[l]);
    });
}

std::vector<double> MarketParams::apply_sigma_inverse(const std::vector<double>& v) const {
    return apply_blockwise(*this, v, [&](int l) {
        return std::pair<double, double>(1.0 / kappa1_[l], 1.0 / kappa2_[l]);
    });
}

std::vector<double> MarketParams::apply_sigma_sqrt(const std::vector<double>& v) const {
    return apply_blockwise(*this, v, [&](int l) {
        return std::pair<double, double>(std::sqrt(kappa1_[l]), std::sqrt(kappa2_[l]));
    });
}

double MarketParams::portfolio_jump_exposure(const std::vector<double>& weights, int l) const {
    double block = 0.0;
    for (int i = 0; i < k_; ++i) block += weights[std::size_t(l) * k_ + i];
    return j_[l] * block;
}

double MarketParams::quadratic_form_sigma(const std::vector<double>& v) const {
    const std::vector<double> sv = apply_sigma(v);
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) acc += v[i] * sv[i];
    return acc;
}

} // namespace contagion
