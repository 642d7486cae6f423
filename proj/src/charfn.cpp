#include "contagion/charfn.hpp"

#include "contagion/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace contagion {

namespace {

using Cpx = std::complex<double>;
using State = std::vector<Cpx>; // (Bt_1..Bt_m, At) with Bt = iB, At = iA

// Right-hand side in the tilde variables:
//   dBt_l/dT = -alpha_l Bt_l + (exp(i u_l + sum_j d_jl Bt_j) - 1)
//   dAt/dT   = sum_l alpha_l lambda_inf_l Bt_l.
// Note the transposed excitation index d_jl: class l's equation couples
// through the bumps class l applies to the others.
void rhs(const HawkesParams& p, const std::vector<double>& u, const State& y, State& dy) {
    const int m = p.m();
    for (int l = 0; l < m; ++l) {
        Cpx expo(0.0, u[l]);
        for (int j = 0; j < m; ++j) expo += p.d(j, l) * y[j];
        dy[l] = -p.alpha()[l] * y[l] + (std::exp(expo) - 1.0);
    }
    Cpx da(0.0, 0.0);
    for (int l = 0; l < m; ++l) da += p.alpha()[l] * p.lambda_inf()[l] * y[l];
    dy[m] = da;
}

} // namespace

CharFnResult riccati_solve(const HawkesParams& params, const std::vector<double>& u,
                           const std::vector<double>& v, double T, double tol) {
    const int m = params.m();
    if (int(u.size()) != m || int(v.size()) != m) {
        throw std::invalid_argument("riccati_solve: u and v must have length m");
    }
    if (T < 0.0) throw std::invalid_argument("riccati_solve: T must be >= 0");

    CharFnResult out;
    out.tol = tol;
    State y(std::size_t(m) + 1, Cpx(0.0, 0.0));
    for (int l = 0; l < m; ++l) y[l] = Cpx(0.0, v[l]);

    if (T > 0.0) {
        // Dormand-Prince 5(4) with PI-free step control; the excitation
        // transient sets the step ceiling.
        static constexpr double a21 = 1.0 / 5;
        static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                                a53 = 64448.0 / 6561, a54 = -212.0 / 729;
        static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                                a64 = 49.0 / 176, a65 = -5103.0 / 18656;
        static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                                b5 = -2187.0 / 6784, b6 = 11.0 / 84;
        static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                                e4 = 125.0 / 192 - 393.0 / 640,
                                e5 = -2187.0 / 6784 + 92097.0 / 339200,
                                e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

        double max_step = T;
        for (double a : params.alpha()) max_step = std::min(max_step, 0.1 / a);
        const std::size_t dim = y.size();
        State k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim), tmp(dim), y5(dim);

        double t = 0.0;
        double h = max_step;
        const double t_tol = 1e-14 * std::max(T, 1.0);
        while (T - t > t_tol) {
            h = std::min(h, T - t);
            rhs(params, u, y, k1);
            for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + h * (a21 * k1[i]);
            rhs(params, u, tmp, k2);
            for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
            rhs(params, u, tmp, k3);
            for (std::size_t i = 0; i < dim; ++i)
                tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
            rhs(params, u, tmp, k4);
            for (std::size_t i = 0; i < dim; ++i)
                tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
            rhs(params, u, tmp, k5);
            for (std::size_t i = 0; i < dim; ++i)
                tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                                     a65 * k5[i]);
            rhs(params, u, tmp, k6);
            for (std::size_t i = 0; i < dim; ++i)
                y5[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
            rhs(params, u, y5, k7);

            double err = 0.0;
            for (std::size_t i = 0; i < dim; ++i) {
                const Cpx e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                                   e7 * k7[i]);
                const double scale = tol * (1.0 + std::abs(y[i]));
                err = std::max(err, std::abs(e) / scale);
            }
            if (err <= 1.0) {
                t += h;
                y.swap(y5);
                ++out.steps;
            }
            const double factor = std::clamp(0.9 * std::pow(std::max(err, 1e-16), -0.2), 0.2, 5.0);
            h = std::min(h * factor, max_step);
            if (h < t_tol && T - t > t_tol) {
                std::ostringstream os;
                os << "riccati_solve: step-size underflow at T=" << t;
                throw std::runtime_error(os.str());
            }
        }
    }

    Cpx exponent = y[std::size_t(m)];
    for (int l = 0; l < m; ++l) exponent += y[l] * params.lambda0()[l];
    out.phi = std::exp(exponent);
    out.A = Cpx(0.0, -1.0) * y[std::size_t(m)];
    out.B.resize(std::size_t(m));
    for (int l = 0; l < m; ++l) out.B[l] = Cpx(0.0, -1.0) * y[l];
    return out;
}

CharFnMC charfn_mc(const HawkesParams& params, const std::vector<double>& u,
                   const std::vector<double>& v, double T, std::size_t n_paths, std::uint64_t seed,
                   Exec mode) {
    const int m = params.m();
    if (int(u.size()) != m || int(v.size()) != m) {
        throw std::invalid_argument("charfn_mc: u and v must have length m");
    }
    if (n_paths < 100) throw std::invalid_argument("charfn_mc: n_paths must be >= 100");
    CharFnMC out;
    out.paths = n_paths;

    if (T == 0.0) {
        double phase = 0.0;
        for (int l = 0; l < m; ++l) phase += v[l] * params.lambda0()[l];
        out.phi = std::exp(Cpx(0.0, phase));
        return out;
    }

    const std::vector<JumpLaw> laws(static_cast<std::size_t>(m), JumpLaw::deterministic(1.0));
    std::vector<double> re(n_paths), im(n_paths);
    for_each_index(n_paths, mode, [&](std::size_t p) {
        const HawkesPath hp = simulate_hawkes(params, laws, T, seed, p);
        double phase = 0.0;
        for (int l = 0; l < m; ++l) {
            phase += u[l] * double(hp.final_state.counts[l]) + v[l] * hp.final_state.lambda[l];
        }
        re[p] = std::cos(phase);
        im[p] = std::sin(phase);
    });
    const MeanStderr mre = mean_stderr(re);
    const MeanStderr mim = mean_stderr(im);
    out.phi = Cpx(mre.mean, mim.mean);
    out.stderr_re = mre.stderr_;
    out.stderr_im = mim.stderr_;
    return out;
}

} // namespace contagion
