#include "contagion/filter.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace contagion {

void EventStream::validate() const {
    if (times.empty()) throw std::invalid_argument("event stream: no classes");
    if (!marks.empty() && marks.size() != times.size()) {
        throw std::invalid_argument("event stream: marks shape mismatch");
    }
    for (std::size_t l = 0; l < times.size(); ++l) {
        for (std::size_t i = 0; i < times[l].size(); ++i) {
            if (times[l][i] < 0.0 || times[l][i] > horizon) {
                throw std::invalid_argument("event stream: time outside data range");
            }
            if (i > 0 && !(times[l][i] > times[l][i - 1])) {
                throw std::invalid_argument("event stream: times must be strictly increasing");
            }
        }
        if (!marks.empty() && marks[l].size() != times[l].size()) {
            throw std::invalid_argument("event stream: marks shape mismatch");
        }
    }
}

EventStream detect_jumps(const std::vector<std::vector<double>>& returns_per_class,
                         const DetectOptions& opt) {
    if (returns_per_class.empty()) throw std::invalid_argument("detect_jumps: no series");
    if (opt.window < 20) throw std::invalid_argument("detect_jumps: window must be >= 20");
    if (!(opt.threshold > 0.0)) throw std::invalid_argument("detect_jumps: threshold must be > 0");

    EventStream out;
    const int m = int(returns_per_class.size());
    out.times.resize(std::size_t(m));
    out.marks.resize(std::size_t(m));
    std::size_t n_obs = 0;
    for (int l = 0; l < m; ++l) {
        const auto& r = returns_per_class[std::size_t(l)];
        if (int(r.size()) <= opt.window) {
            throw std::invalid_argument("detect_jumps: series shorter than window");
        }
        for (double v : r) {
            if (!std::isfinite(v)) throw std::invalid_argument("detect_jumps: non-finite return");
        }
        n_obs = std::max(n_obs, r.size());

        // Trailing moments, current observation excluded.
        double sum = 0.0, sumsq = 0.0;
        for (int i = 0; i < opt.window; ++i) {
            sum += r[std::size_t(i)];
            sumsq += r[std::size_t(i)] * r[std::size_t(i)];
        }
        for (std::size_t i = std::size_t(opt.window); i < r.size(); ++i) {
            const double mean = sum / opt.window;
            const double var = std::max((sumsq - opt.window * mean * mean) / (opt.window - 1), 0.0);
            const double sd = std::sqrt(var);
            const bool hit = sd > 0.0 && (opt.negative_only
                                              ? r[i] < -opt.threshold * sd
                                              : std::abs(r[i]) > opt.threshold * sd);
            if (hit) {
                out.times[std::size_t(l)].push_back(double(i) / opt.periods_per_year);
                out.marks[std::size_t(l)].push_back(std::abs(r[i]) / sd);
            }
            sum += r[i] - r[i - std::size_t(opt.window)];
            sumsq += r[i] * r[i] - r[i - std::size_t(opt.window)] * r[i - std::size_t(opt.window)];
        }
    }
    out.horizon = double(n_obs) / opt.periods_per_year;
    out.validate();
    return out;
}

namespace {

struct FlatEvent {
    double t;
    int cls;
};

// Merged, time-sorted events; simultaneous duplicates within one class are
// collapsed (the counting process increments by at most one per instant).
std::vector<FlatEvent> flatten_events(const EventStream& events) {
    std::vector<FlatEvent> flat;
    for (int l = 0; l < events.m(); ++l) {
        for (double t : events.times[std::size_t(l)]) flat.push_back({t, l});
    }
    std::sort(flat.begin(), flat.end(), [](const FlatEvent& a, const FlatEvent& b) {
        return a.t < b.t || (a.t == b.t && a.cls < b.cls);
    });
    flat.erase(std::unique(flat.begin(), flat.end(),
                           [](const FlatEvent& a, const FlatEvent& b) {
                               return a.t == b.t && a.cls == b.cls;
                           }),
               flat.end());
    return flat;
}

} // namespace

IntensityTrajectory filter_intensity(const EventStream& events, const HawkesParams& params,
                                     double grid_dt) {
    events.validate();
    if (events.m() != params.m()) throw std::invalid_argument("filter_intensity: class mismatch");
    if (!(grid_dt > 0.0)) throw std::invalid_argument("filter_intensity: grid_dt must be > 0");
    const int m = params.m();
    const double T = events.horizon;
    const std::vector<FlatEvent> flat = flatten_events(events);

    std::vector<double> grid;
    for (double t = 0.0; t < T; t += grid_dt) grid.push_back(t);
    grid.push_back(T);
    for (const auto& ev : flat) grid.push_back(ev.t);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    IntensityTrajectory out;
    out.times = grid;
    out.lambda.assign(grid.size(), std::vector<double>(std::size_t(m), 0.0));
    out.event_mark.assign(grid.size(), std::vector<int>(std::size_t(m), 0));

    IntensityState st = initial_state(params);
    std::size_t ev = 0;
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        const double t = grid[gi];
        st = decay(st, t - st.t, params);
        while (ev < flat.size() && flat[ev].t <= t) {
            st = excite(st, flat[ev].cls, params);
            out.event_mark[gi][std::size_t(flat[ev].cls)] = 1;
            ++ev;
        }
        out.lambda[gi] = st.lambda;
    }
    return out;
}

// ---------- maximum likelihood ----------

namespace {

struct LikelihoodWork {
    double loglik = 0.0;
    std::vector<double> grad; // d/d(alpha_l), d/d(lambda_inf_l), d/d(d_lj)
};

// Log-likelihood with lambda0 = lambda_inf (no initial transient) and
// analytic gradient. theta layout: alpha (m), lambda_inf (m), d (m*m).
LikelihoodWork loglik_and_grad(const EventStream& events, double T,
                               const std::vector<double>& theta, int m) {
    const double* alpha = theta.data();
    const double* linf = theta.data() + m;
    const double* d = theta.data() + 2 * m;
    LikelihoodWork out;
    out.grad.assign(theta.size(), 0.0);
    double* g_alpha = out.grad.data();
    double* g_linf = out.grad.data() + m;
    double* g_d = out.grad.data() + 2 * m;

    const std::vector<FlatEvent> flat = flatten_events(events);

    // S[l][j] = sum_{t_i^j < t} e^{-alpha_l (t - t_i)}; W = d/dalpha_l of -S.
    std::vector<double> S(std::size_t(m) * m, 0.0), W(std::size_t(m) * m, 0.0);
    double t_prev = 0.0;
    for (const auto& ev : flat) {
        const double dt = ev.t - t_prev;
        for (int l = 0; l < m; ++l) {
            const double f = std::exp(-alpha[l] * dt);
            for (int j = 0; j < m; ++j) {
                const std::size_t ij = std::size_t(l) * m + j;
                W[ij] = (W[ij] + dt * S[ij]) * f;
                S[ij] *= f;
            }
        }
        t_prev = ev.t;

        const int c = ev.cls;
        double lam = linf[c];
        double dlam_dalpha = 0.0;
        for (int j = 0; j < m; ++j) {
            const std::size_t cj = std::size_t(c) * m + j;
            lam += d[cj] * S[cj];
            dlam_dalpha -= d[cj] * W[cj];
        }
        lam = std::max(lam, 1e-300);
        out.loglik += std::log(lam);
        g_linf[c] += 1.0 / lam;
        g_alpha[c] += dlam_dalpha / lam;
        for (int j = 0; j < m; ++j) {
            const std::size_t cj = std::size_t(c) * m + j;
            g_d[cj] += S[cj] / lam;
        }

        for (int l = 0; l < m; ++l) S[std::size_t(l) * m + c] += 1.0;
    }

    // Compensator: Lambda_l(T) = lambda_inf_l T + sum_j (d_lj/alpha_l) C_lj.
    std::vector<double> C(std::size_t(m) * m, 0.0), D(std::size_t(m) * m, 0.0);
    for (const auto& ev : flat) {
        const double rem = T - ev.t;
        for (int l = 0; l < m; ++l) {
            const double e = std::exp(-alpha[l] * rem);
            C[std::size_t(l) * m + ev.cls] += 1.0 - e;
            D[std::size_t(l) * m + ev.cls] += rem * e;
        }
    }
    for (int l = 0; l < m; ++l) {
        out.loglik -= linf[l] * T;
        g_linf[l] -= T;
        for (int j = 0; j < m; ++j) {
            const std::size_t lj = std::size_t(l) * m + j;
            out.loglik -= d[lj] / alpha[l] * C[lj];
            g_d[lj] -= C[lj] / alpha[l];
            g_alpha[l] -= d[lj] * (-C[lj] / (alpha[l] * alpha[l]) + D[lj] / alpha[l]);
        }
    }
    return out;
}

double sigmoid(double y) { return 1.0 / (1.0 + std::exp(-y)); }

} // namespace

double hawkes_loglik(const EventStream& events, double horizon, const HawkesParams& params) {
    events.validate();
    const int m = params.m();
    std::vector<double> theta;
    theta.insert(theta.end(), params.alpha().begin(), params.alpha().end());
    theta.insert(theta.end(), params.lambda_inf().begin(), params.lambda_inf().end());
    theta.insert(theta.end(), params.d().begin(), params.d().end());
    // The closed-form compensator here assumes lambda0 = lambda_inf; fall back
    // to adding the transient term for general lambda0.
    double ll = loglik_and_grad(events, horizon, theta, m).loglik;
    for (int l = 0; l < m; ++l) {
        const double extra = params.lambda0()[l] - params.lambda_inf()[l];
        if (extra != 0.0) {
            // int_0^T (lambda0 - lambda_inf) e^{-alpha t} dt affects the
            // compensator; the event-term correction uses the same decay.
            ll -= extra * (1.0 - std::exp(-params.alpha()[l] * horizon)) / params.alpha()[l];
        }
    }
    if (params.lambda0() != params.lambda_inf()) {
        // Event-intensity correction for the transient.
        const std::vector<FlatEvent> flat = flatten_events(events);
        for (const auto& ev : flat) {
            const int c = ev.cls;
            double lam_base = params.lambda_inf()[c];
            // reconstruct S at t- for class c
            double s_corr = (params.lambda0()[c] - params.lambda_inf()[c]) *
                            std::exp(-params.alpha()[c] * ev.t);
            double lam_full = lam_base + s_corr;
            for (const auto& ev2 : flat) {
                if (ev2.t >= ev.t) break;
                lam_full += params.d(c, ev2.cls) * std::exp(-params.alpha()[c] * (ev.t - ev2.t));
                lam_base += params.d(c, ev2.cls) * std::exp(-params.alpha()[c] * (ev.t - ev2.t));
            }
            ll += std::log(std::max(lam_full, 1e-300)) - std::log(std::max(lam_base, 1e-300));
        }
    }
    return ll;
}

MleResult calibrate_mle(const EventStream& events, double horizon, const HawkesParams& init,
                        const MleOptions& opt) {
    events.validate();
    const int m = init.m();
    if (events.m() != m) throw std::invalid_argument("calibrate_mle: class mismatch");
    const int dim = 2 * m + m * m;

    std::vector<double> lo(opt.lower), hi(opt.upper);
    if (lo.empty()) {
        lo.assign(std::size_t(dim), 0.0);
        hi.assign(std::size_t(dim), 0.0);
        for (int i = 0; i < m; ++i) {
            lo[i] = 1e-2;
            hi[i] = 1e3;
            lo[m + i] = 1e-8;
            hi[m + i] = 1e3;
        }
        for (int i = 2 * m; i < dim; ++i) {
            lo[i] = 0.0;
            hi[i] = 1e3;
        }
    }
    if (int(lo.size()) != dim || int(hi.size()) != dim) {
        throw std::invalid_argument("calibrate_mle: bounds must have length 2m + m^2");
    }

    // Squash onto the box: theta = lo + (hi - lo) sigmoid(y).
    std::vector<double> theta0;
    theta0.insert(theta0.end(), init.alpha().begin(), init.alpha().end());
    theta0.insert(theta0.end(), init.lambda_inf().begin(), init.lambda_inf().end());
    theta0.insert(theta0.end(), init.d().begin(), init.d().end());
    std::vector<double> y(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) {
        const double frac = std::clamp((theta0[i] - lo[i]) / (hi[i] - lo[i]), 1e-9, 1.0 - 1e-9);
        y[i] = std::log(frac / (1.0 - frac));
    }

    auto unpack = [&](const std::vector<double>& yv) {
        std::vector<double> th(static_cast<std::size_t>(dim));
        for (int i = 0; i < dim; ++i) th[i] = lo[i] + (hi[i] - lo[i]) * sigmoid(yv[i]);
        return th;
    };
    auto eval = [&](const std::vector<double>& yv, std::vector<double>& grad_y) {
        const std::vector<double> th = unpack(yv);
        const LikelihoodWork w = loglik_and_grad(events, horizon, th, m);
        grad_y.assign(std::size_t(dim), 0.0);
        for (int i = 0; i < dim; ++i) {
            const double s = sigmoid(yv[i]);
            grad_y[i] = w.grad[i] * (hi[i] - lo[i]) * s * (1.0 - s);
        }
        return w.loglik;
    };

    // BFGS ascent with Armijo backtracking.
    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(dim, dim);
    std::vector<double> grad_y;
    double ll = eval(y, grad_y);
    bool converged = false;
    int iters = 0;
    for (; iters < opt.max_iters; ++iters) {
        double gmax = 0.0;
        for (double g : grad_y) gmax = std::max(gmax, std::abs(g));
        if (gmax < opt.grad_tol * (1.0 + std::abs(ll))) {
            converged = true;
            break;
        }
        Eigen::VectorXd g(dim);
        for (int i = 0; i < dim; ++i) g[i] = grad_y[i];
        Eigen::VectorXd p = H * g; // ascent direction
        if (p.dot(g) <= 0.0) {
            H = Eigen::MatrixXd::Identity(dim, dim);
            p = g;
        }
        double step = 1.0;
        std::vector<double> y_new(static_cast<std::size_t>(dim)), grad_new;
        double ll_new = -std::numeric_limits<double>::infinity();
        const double slope = p.dot(g);
        for (int ls = 0; ls < 40; ++ls) {
            for (int i = 0; i < dim; ++i) y_new[i] = y[i] + step * p[i];
            ll_new = eval(y_new, grad_new);
            if (std::isfinite(ll_new) && ll_new >= ll + 1e-4 * step * slope) break;
            step *= 0.5;
        }
        if (!(ll_new > ll - 1e-14 * std::abs(ll))) {
            // Line search exhausted at numerical precision; accept first-order
            // stationarity at a looser threshold.
            double g2 = 0.0;
            for (double g : grad_y) g2 = std::max(g2, std::abs(g));
            converged = g2 < 1e3 * opt.grad_tol * (1.0 + std::abs(ll));
            break;
        }
        Eigen::VectorXd s(dim), yvec(dim);
        for (int i = 0; i < dim; ++i) {
            s[i] = y_new[i] - y[i];
            yvec[i] = grad_new[i] - grad_y[i]; // gradient change (ascent)
        }
        const double sy = s.dot(-yvec); // curvature wrt -LL
        if (sy > 1e-12) {
            const Eigen::VectorXd Hy = H * (-yvec);
            const double yHy = (-yvec).dot(Hy);
            H += ((sy + yHy) / (sy * sy)) * (s * s.transpose()) -
                 (Hy * s.transpose() + s * Hy.transpose()) / sy;
        }
        y = y_new;
        grad_y = grad_new;
        ll = ll_new;
    }

    const std::vector<double> theta = unpack(y);
    std::vector<double> alpha(theta.begin(), theta.begin() + m);
    std::vector<double> linf(theta.begin() + m, theta.begin() + 2 * m);
    std::vector<double> dmat(theta.begin() + 2 * m, theta.end());
    std::vector<double> lambda0 = linf;
    for (double& v : lambda0) v = std::max(v, 1e-12); // lambda0 > 0 required

    MleResult res{HawkesParams(alpha, linf, lambda0, dmat),
                  ll,
                  converged,
                  iters,
                  {},
                  {},
                  {}};

    // Observed information: central differences of the analytic theta-gradient.
    Eigen::MatrixXd info(dim, dim);
    for (int i = 0; i < dim; ++i) {
        const double h = 1e-5 * std::max(1.0, std::abs(theta[i]));
        std::vector<double> tp = theta, tm = theta;
        tp[i] += h;
        tm[i] = std::max(tm[i] - h, lo[i] == 0.0 ? 0.0 : lo[i]);
        const LikelihoodWork wp = loglik_and_grad(events, horizon, tp, m);
        const LikelihoodWork wm = loglik_and_grad(events, horizon, tm, m);
        const double denom = tp[i] - tm[i];
        for (int j = 0; j < dim; ++j) info(i, j) = -(wp.grad[j] - wm.grad[j]) / denom;
    }
    info = 0.5 * (info + info.transpose().eval());
    const Eigen::MatrixXd cov = info.completeOrthogonalDecomposition().pseudoInverse();
    res.stderr_alpha.resize(std::size_t(m));
    res.stderr_lambda_inf.resize(std::size_t(m));
    res.stderr_d.resize(std::size_t(m) * m);
    for (int i = 0; i < m; ++i) {
        res.stderr_alpha[i] = std::sqrt(std::max(cov(i, i), 0.0));
        res.stderr_lambda_inf[i] = std::sqrt(std::max(cov(m + i, m + i), 0.0));
    }
    for (int i = 0; i < m * m; ++i) {
        res.stderr_d[i] = std::sqrt(std::max(cov(2 * m + i, 2 * m + i), 0.0));
    }
    return res;
}

} // namespace contagion
