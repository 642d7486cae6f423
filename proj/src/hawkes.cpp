#include "contagion/hawkes.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace contagion {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

StationarityReport build_report(int m, const std::vector<double>& alpha,
                                const std::vector<double>& d) {
    StationarityReport rep;
    rep.gamma.assign(std::size_t(m) * m, 0.0);
    Eigen::MatrixXd ratio(m, m);
    Eigen::MatrixXd gamma(m, m);
    for (int l = 0; l < m; ++l) {
        for (int j = 0; j < m; ++j) {
            const double dlj = d[std::size_t(l) * m + j];
            ratio(l, j) = dlj / alpha[l];
            gamma(l, j) = (l == j ? alpha[j] : 0.0) - dlj;
            rep.gamma[std::size_t(l) * m + j] = gamma(l, j);
        }
    }
    const Eigen::VectorXcd eigs = Eigen::EigenSolver<Eigen::MatrixXd>(ratio, false).eigenvalues();
    double rho = 0.0;
    for (int i = 0; i < eigs.size(); ++i) rho = std::max(rho, std::abs(eigs[i]));
    rep.spectral_radius = rho;
    rep.is_stationary = rho < 1.0;
    rep.gamma_nonsingular = Eigen::FullPivLU<Eigen::MatrixXd>(gamma).isInvertible();
    return rep;
}

} // namespace

HawkesParams::HawkesParams(std::vector<double> alpha, std::vector<double> lambda_inf,
                           std::vector<double> lambda0, std::vector<double> d_row_major)
    : m_(int(alpha.size())),
      alpha_(std::move(alpha)),
      lambda_inf_(std::move(lambda_inf)),
      lambda0_(std::move(lambda0)),
      d_(std::move(d_row_major)) {
    require(m_ >= 1, "hawkes: m must be >= 1");
    require(int(lambda_inf_.size()) == m_, "hawkes: lambda_inf length != m");
    require(int(lambda0_.size()) == m_, "hawkes: lambda0 length != m");
    require(d_.size() == std::size_t(m_) * m_, "hawkes: d must be m x m");
    for (int l = 0; l < m_; ++l) {
        require(std::isfinite(alpha_[l]) && alpha_[l] > 0.0, "hawkes: alpha must be > 0");
        require(std::isfinite(lambda_inf_[l]) && lambda_inf_[l] >= 0.0,
                "hawkes: lambda_inf must be >= 0");
        require(std::isfinite(lambda0_[l]) && lambda0_[l] > 0.0, "hawkes: lambda0 must be > 0");
    }
    for (double v : d_) require(std::isfinite(v) && v >= 0.0, "hawkes: d entries must be >= 0");
    report_ = build_report(m_, alpha_, d_);
}

std::vector<double> HawkesParams::d_column(int j) const {
    std::vector<double> col(static_cast<std::size_t>(m_));
    for (int l = 0; l < m_; ++l) col[l] = d(l, j);
    return col;
}

std::vector<double> HawkesParams::stationary_mean() const {
    if (!report_.is_stationary) {
        throw std::runtime_error("hawkes: no stationary mean (spectral radius >= 1)");
    }
    Eigen::MatrixXd gamma(m_, m_);
    Eigen::VectorXd rhs(m_);
    for (int l = 0; l < m_; ++l) {
        rhs[l] = alpha_[l] * lambda_inf_[l];
        for (int j = 0; j < m_; ++j) gamma(l, j) = report_.gamma[std::size_t(l) * m_ + j];
    }
    const Eigen::VectorXd sol = gamma.partialPivLu().solve(rhs);
    return std::vector<double>(sol.data(), sol.data() + m_);
}

StationarityReport check_stationarity(const HawkesParams& params) { return params.stationarity(); }

IntensityState initial_state(const HawkesParams& params) {
    IntensityState s;
    s.t = 0.0;
    s.lambda = params.lambda0();
    s.counts.assign(std::size_t(params.m()), 0);
    return s;
}

IntensityState decay(const IntensityState& state, double dt, const HawkesParams& params) {
    if (dt < 0.0) throw std::invalid_argument("decay: dt must be >= 0");
    IntensityState out = state;
    out.t += dt;
    for (int l = 0; l < params.m(); ++l) {
        const double linf = params.lambda_inf()[l];
        out.lambda[l] = linf + (state.lambda[l] - linf) * std::exp(-params.alpha()[l] * dt);
    }
    return out;
}

IntensityState excite(const IntensityState& state, int j, const HawkesParams& params) {
    if (j < 0 || j >= params.m()) throw std::invalid_argument("excite: class out of range");
    IntensityState out = state;
    for (int l = 0; l < params.m(); ++l) out.lambda[l] += params.d(l, j);
    out.counts[j] += 1;
    return out;
}

double generator_apply(const HawkesParams& params, const StateFunction& g,
                       const std::vector<std::int64_t>& counts, const std::vector<double>& lambda,
                       const std::vector<double>* analytic_dlambda) {
    const int m = params.m();
    double acc = 0.0;
    const double g0 = g(counts, lambda);
    std::vector<double> lam_shift = lambda;
    std::vector<std::int64_t> cnt_shift = counts;
    for (int l = 0; l < m; ++l) {
        double dg;
        if (analytic_dlambda) {
            dg = (*analytic_dlambda)[l];
        } else {
            const double h = 1e-6 * std::max(1.0, std::abs(lambda[l]));
            std::vector<double> up = lambda, dn = lambda;
            up[l] += h;
            dn[l] -= h;
            dg = (g(counts, up) - g(counts, dn)) / (2.0 * h);
        }
        acc += params.alpha()[l] * (params.lambda_inf()[l] - lambda[l]) * dg;

        for (int i = 0; i < m; ++i) lam_shift[i] = lambda[i] + params.d(i, l);
        cnt_shift[l] += 1;
        acc += lambda[l] * (g(cnt_shift, lam_shift) - g0);
        cnt_shift[l] -= 1;
    }
    return acc;
}

} // namespace contagion
