#include "contagion/simulate.hpp"

#include "contagion/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace contagion {

namespace {

double total_intensity(const std::vector<double>& lambda) {
    double s = 0.0;
    for (double v : lambda) s += v;
    return s;
}

} // namespace

HawkesPath simulate_hawkes(const HawkesParams& params, const std::vector<JumpLaw>& laws, double T,
                           std::uint64_t seed, std::uint64_t path_index) {
    if (!(T > 0.0)) throw std::invalid_argument("simulate_hawkes: T must be > 0");
    if (int(laws.size()) != params.m()) {
        throw std::invalid_argument("simulate_hawkes: need one jump law per class");
    }
    const int m = params.m();
    double refresh = std::numeric_limits<double>::infinity();
    for (double a : params.alpha()) refresh = std::min(refresh, 1.0 / a);

    PathRng rng(seed, path_index);
    HawkesPath out;
    IntensityState state = initial_state(params);

    double window_end = std::min(state.t + refresh, T);
    double bound = 0.0;
    auto refresh_bound = [&]() {
        bound = 0.0;
        for (int l = 0; l < m; ++l) bound += std::max(state.lambda[l], params.lambda_inf()[l]);
    };
    refresh_bound();

    while (state.t < T) {
        const double wait = rng.thinning.exponential() / bound;
        const double cand = state.t + wait;
        if (cand >= window_end) {
            state = decay(state, window_end - state.t, params);
            if (window_end >= T) break;
            window_end = std::min(state.t + refresh, T);
            refresh_bound();
            continue;
        }
        state = decay(state, cand - state.t, params);
        const double lam_tot = total_intensity(state.lambda);
        const double u = rng.thinning.uniform();
        if (u * bound <= lam_tot) {
            // Accepted: pick the class proportionally to its intensity.
            const double v = rng.class_select.uniform() * lam_tot;
            int cls = m - 1;
            double cum = 0.0;
            for (int l = 0; l < m; ++l) {
                cum += state.lambda[l];
                if (v <= cum) {
                    cls = l;
                    break;
                }
            }
            const double z = laws[std::size_t(cls)].sample(rng.marks.uniform());
            state = excite(state, cls, params);
            out.log.events.push_back(SimEvent{state.t, cls, z, {}});
            window_end = std::min(state.t + refresh, T);
            refresh_bound();
        }
        // On rejection the bound stays valid on the remaining window.
    }
    if (state.t < T) state = decay(state, T - state.t, params);
    out.final_state = state;
    return out;
}

std::vector<double> compensator(const HawkesParams& params, const EventLog& log, double T) {
    const int m = params.m();
    std::vector<double> out(static_cast<std::size_t>(m), 0.0);
    for (int l = 0; l < m; ++l) {
        const double a = params.alpha()[l];
        const double linf = params.lambda_inf()[l];
        out[l] = linf * T + (params.lambda0()[l] - linf) * (1.0 - std::exp(-a * T)) / a;
    }
    for (const auto& ev : log.events) {
        if (ev.t >= T) break;
        for (int l = 0; l < m; ++l) {
            const double a = params.alpha()[l];
            out[l] += params.d(l, ev.cls) * (1.0 - std::exp(-a * (T - ev.t))) / a;
        }
    }
    return out;
}

IntensityWalker::IntensityWalker(const HawkesParams& params, const EventLog& log)
    : params_(&params), log_(&log), state_(initial_state(params)) {}

void IntensityWalker::advance_to(double t) {
    while (next_event_ < log_->events.size() && log_->events[next_event_].t <= t) {
        const auto& ev = log_->events[next_event_];
        state_ = decay(state_, ev.t - state_.t, *params_);
        state_ = excite(state_, ev.cls, *params_);
        ++next_event_;
    }
    if (t > state_.t) state_ = decay(state_, t - state_.t, *params_);
}

std::vector<double> IntensityWalker::lambda_left_at(double t) const {
    IntensityState s = state_;
    std::size_t i = next_event_;
    const auto& evs = log_->events;
    while (i < evs.size() && evs[i].t < t) {
        s = decay(s, evs[i].t - s.t, *params_);
        s = excite(s, evs[i].cls, *params_);
        ++i;
    }
    s = decay(s, t - s.t, *params_);
    return s.lambda;
}

std::vector<std::vector<double>> intensity_on_grid(const HawkesParams& params, const EventLog& log,
                                                   const std::vector<double>& times) {
    IntensityWalker walker(params, log);
    std::vector<std::vector<double>> out;
    out.reserve(times.size());
    for (double t : times) {
        walker.advance_to(t);
        out.push_back(walker.state().lambda);
    }
    return out;
}

// ---- market simulation ----

namespace {

// Union of the uniform grid and the exact event times. Event times are kept
// verbatim; a uniform point colliding with an event (within tolerance) is
// dropped so jumps are never displaced.
std::vector<double> merged_times(double T, double dt, const EventLog& log) {
    const double tol = 1e-12 * std::max(1.0, T);
    std::vector<double> ev_times;
    ev_times.reserve(log.events.size());
    for (const auto& ev : log.events) ev_times.push_back(ev.t);

    std::vector<double> times;
    const std::size_t steps = std::size_t(std::ceil(T / dt - 1e-12));
    times.reserve(steps + 1 + ev_times.size());
    times.push_back(0.0);
    for (std::size_t i = 1; i <= steps; ++i) {
        const double u = std::min(double(i) * dt, T);
        const auto it = std::lower_bound(ev_times.begin(), ev_times.end(), u - tol);
        if (it != ev_times.end() && std::abs(*it - u) <= tol) continue;
        times.push_back(u);
    }
    times.insert(times.end(), ev_times.begin(), ev_times.end());
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    if (times.back() < T) times.push_back(T);
    return times;
}

bool decision_is_solvent(const MarketParams& market, const std::vector<double>& lambda,
                         const std::vector<double>& weights) {
    for (int l = 0; l < market.m(); ++l) {
        if (lambda[l] <= 0.0) continue;
        const double exposure = market.portfolio_jump_exposure(weights, l);
        for (double z : market.laws()[l].support()) {
            if (1.0 + exposure * z <= 0.0) return false;
        }
    }
    return true;
}

} // namespace

SimPath simulate_market(const MarketParams& market, const HawkesParams& hawkes,
                        const PolicyFn& policy, const MarketSimConfig& cfg, std::uint64_t seed,
                        std::uint64_t path_index) {
    if (!(cfg.dt > 0.0)) throw std::invalid_argument("simulate_market: dt must be > 0");
    if (!(cfg.T > 0.0)) throw std::invalid_argument("simulate_market: T must be > 0");
    if (!(cfg.x0 > 0.0)) throw std::invalid_argument("simulate_market: x0 must be > 0");
    if (market.m() != hawkes.m()) {
        throw std::invalid_argument("simulate_market: market and hawkes class counts differ");
    }
    const int n = market.n();

    HawkesPath hp = simulate_hawkes(hawkes, market.laws(), cfg.T, seed, path_index);
    PathRng rng(seed, path_index); // gauss substream is untouched by the hawkes pass

    SimPath out;
    out.events = std::move(hp.log);
    const std::vector<double> times = merged_times(cfg.T, cfg.dt, out.events);
    const std::vector<double> Rfull = market.full_returns();
    const double r = market.r();

    IntensityState istate = initial_state(hawkes);
    std::vector<double> prices(static_cast<std::size_t>(n), 1.0);
    double s0 = 1.0;
    double x = cfg.x0;
    std::size_t ev_idx = 0;

    auto record = [&](double t, const PolicyDecision& dec) {
        out.final_wealth = x;
        out.final_lambda = istate.lambda;
        out.final_counts = istate.counts;
        if (!cfg.record_path) return;
        out.times.push_back(t);
        out.lambda.push_back(istate.lambda);
        out.counts.push_back(istate.counts);
        std::vector<double> row;
        row.reserve(std::size_t(n) + 1);
        row.push_back(s0);
        row.insert(row.end(), prices.begin(), prices.end());
        out.prices.push_back(std::move(row));
        out.wealth.push_back(x);
        out.weights.push_back(dec.weights);
        out.consumption.push_back(dec.consumption);
    };

    PolicyDecision dec = policy(0.0, istate.lambda, x);
    if (int(dec.weights.size()) != n) {
        throw std::invalid_argument("simulate_market: policy returned wrong weight length");
    }
    if (!decision_is_solvent(market, istate.lambda, dec.weights)) {
        out.status = PathStatus::solvency_violation;
        out.stop_time = 0.0;
        record(0.0, dec);
        return out;
    }
    record(0.0, dec);

    std::vector<double> dw(static_cast<std::size_t>(n));
    for (std::size_t ti = 1; ti < times.size(); ++ti) {
        const double t_prev = times[ti - 1];
        const double t = times[ti];
        const double h = t - t_prev;

        // Diffusion part over (t_prev, t] under the decision in force.
        double omega_dot_R = 0.0;
        for (int i = 0; i < n; ++i) omega_dot_R += dec.weights[i] * Rfull[i];
        const double sqrt_h = std::sqrt(h);
        for (int i = 0; i < n; ++i) dw[i] = sqrt_h * rng.gauss.gauss();
        const std::vector<double> sdw = market.apply_sigma_sqrt(dw);
        double omega_sdw = 0.0;
        for (int i = 0; i < n; ++i) omega_sdw += dec.weights[i] * sdw[i];

        s0 *= std::exp(r * h);
        if (cfg.log_space) {
            for (int i = 0; i < n; ++i) {
                const double sii = market.upsilon()[i / market.k()] * market.upsilon()[i / market.k()];
                prices[i] *= std::exp((r + Rfull[i] - 0.5 * sii) * h + sdw[i]);
            }
            const double cfrac = dec.consumption / std::max(x, 1e-300);
            const double qf = market.quadratic_form_sigma(dec.weights);
            x *= std::exp((r + omega_dot_R - cfrac - 0.5 * qf) * h + omega_sdw);
        } else {
            for (int i = 0; i < n; ++i) prices[i] *= 1.0 + (r + Rfull[i]) * h + sdw[i];
            x = x * (1.0 + (r + omega_dot_R) * h + omega_sdw) - dec.consumption * h;
        }
        if (!(x > 0.0)) {
            out.status = PathStatus::ruin;
            out.stop_time = t;
            istate = decay(istate, t - istate.t, hawkes);
            record(t, dec);
            return out;
        }

        // Jump at t, applied with the left-limit decision.
        bool jumped = false;
        while (ev_idx < out.events.events.size() &&
               out.events.events[ev_idx].t <= t + 1e-15 * std::max(1.0, cfg.T)) {
            auto& ev = out.events.events[ev_idx];
            const double exposure = market.portfolio_jump_exposure(dec.weights, ev.cls);
            ev.pre_exposure = exposure;
            const double factor = 1.0 + exposure * ev.z;
            for (int i = 0; i < market.k(); ++i) {
                prices[std::size_t(ev.cls) * market.k() + i] *= 1.0 + market.j()[ev.cls] * ev.z;
            }
            istate = decay(istate, ev.t - istate.t, hawkes);
            istate = excite(istate, ev.cls, hawkes);
            ++ev_idx;
            jumped = true;
            if (factor <= 0.0) {
                x = 0.0;
                out.status = PathStatus::ruin;
                out.stop_time = t;
                record(t, dec);
                return out;
            }
            x *= factor;
        }
        if (!jumped) istate = decay(istate, t - istate.t, hawkes);

        // Decision in force from t onward (cadlag row).
        dec = policy(t, istate.lambda, x);
        if (!decision_is_solvent(market, istate.lambda, dec.weights)) {
            out.status = PathStatus::solvency_violation;
            out.stop_time = t;
            record(t, dec);
            return out;
        }
        record(t, dec);
    }
    return out;
}

PolicyFn riskless_only_policy(int n) {
    return [n](double, const std::vector<double>&, double) {
        PolicyDecision d;
        d.weights.assign(std::size_t(n), 0.0);
        d.consumption = 0.0;
        return d;
    };
}

PolicyFn constant_weights_policy(std::vector<double> weights, double consumption_fraction) {
    return [w = std::move(weights), consumption_fraction](double, const std::vector<double>&,
                                                          double x) {
        PolicyDecision d;
        d.weights = w;
        d.consumption = consumption_fraction * x;
        return d;
    };
}

PolicyFn log_optimal_policy(const MarketParams& market, double beta) {
    return [market, beta](double, const std::vector<double>& lambda, double x) {
        const PolicyResult pr = solve_log_policy(market, lambda, beta);
        PolicyDecision d;
        d.weights = pr.omega_full;
        d.consumption = consumption_rate(beta, x);
        return d;
    };
}

} // namespace contagion
