#include "contagion/value.hpp"

#include "contagion/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace contagion {

// ---------- UtilitySpec ----------

UtilitySpec UtilitySpec::log_u(double beta) {
    UtilitySpec u;
    u.kind = Kind::log_utility;
    u.beta = beta;
    u.validate();
    return u;
}

UtilitySpec UtilitySpec::power_u(double beta, double gamma) {
    UtilitySpec u;
    u.kind = Kind::power;
    u.beta = beta;
    u.gamma = gamma;
    u.validate();
    return u;
}

UtilitySpec UtilitySpec::exponential_u(double beta, double gamma) {
    UtilitySpec u;
    u.kind = Kind::exponential;
    u.beta = beta;
    u.gamma = gamma;
    u.validate();
    return u;
}

double UtilitySpec::kappa(double r) const {
    if (kind != Kind::exponential) {
        throw std::logic_error("utility: kappa is defined for the exponential investor only");
    }
    return r * gamma;
}

std::string UtilitySpec::kind_name() const {
    switch (kind) {
        case Kind::log_utility: return "log";
        case Kind::power: return "power";
        case Kind::exponential: return "exponential";
    }
    return "?";
}

void UtilitySpec::validate() const {
    if (!(beta > 0.0)) throw std::invalid_argument("utility: beta must be > 0");
    if (kind == Kind::power) {
        if (!(gamma < 1.0) || gamma == 0.0 || !std::isfinite(gamma)) {
            throw std::invalid_argument("utility: power gamma must lie in (-inf,0) or (0,1)");
        }
    }
    if (kind == Kind::exponential) {
        if (!(gamma > 0.0) || !std::isfinite(gamma)) {
            throw std::invalid_argument("utility: exponential gamma must be > 0");
        }
    }
}

// ---------- GridSpec ----------

void GridSpec::validate() const {
    if (lo.size() != hi.size() || lo.size() != count.size() || lo.empty()) {
        throw std::invalid_argument("grid: lo/hi/count must have equal nonzero length");
    }
    for (std::size_t a = 0; a < lo.size(); ++a) {
        if (!(hi[a] > lo[a])) throw std::invalid_argument("grid: hi must exceed lo");
        if (count[a] < 2) throw std::invalid_argument("grid: need at least 2 points per axis");
    }
}

std::size_t GridSpec::total() const {
    std::size_t n = 1;
    for (int c : count) n *= std::size_t(c);
    return n;
}

double GridSpec::step(int axis) const { return (hi[axis] - lo[axis]) / (count[axis] - 1); }

double GridSpec::coord(int axis, int idx) const { return lo[axis] + idx * step(axis); }

std::vector<int> GridSpec::unflatten(std::size_t flat) const {
    std::vector<int> idx(lo.size());
    for (int a = dims() - 1; a >= 0; --a) {
        idx[a] = int(flat % std::size_t(count[a]));
        flat /= std::size_t(count[a]);
    }
    return idx;
}

std::size_t GridSpec::flatten(const std::vector<int>& idx) const {
    std::size_t flat = 0;
    for (int a = 0; a < dims(); ++a) flat = flat * std::size_t(count[a]) + std::size_t(idx[a]);
    return flat;
}

std::vector<double> GridSpec::node(std::size_t flat) const {
    const std::vector<int> idx = unflatten(flat);
    std::vector<double> x(lo.size());
    for (int a = 0; a < dims(); ++a) x[a] = coord(a, idx[a]);
    return x;
}

GridSpec default_grid_box(const HawkesParams& params, int points_per_axis, std::uint64_t seed) {
    const int m = params.m();
    const std::vector<double> mean = params.stationary_mean();

    // One long stationary path for the per-class standard deviation.
    double min_alpha = params.alpha()[0];
    for (double a : params.alpha()) min_alpha = std::min(min_alpha, a);
    const double relax = 1.0 / min_alpha;
    const double T = 400.0 * relax;
    const double burn = 40.0 * relax;
    const std::vector<JumpLaw> laws(static_cast<std::size_t>(m), JumpLaw::deterministic(1.0));
    const HawkesPath hp = simulate_hawkes(params, laws, T, seed, 0);
    IntensityWalker walker(params, hp.log);
    std::vector<double> s1(static_cast<std::size_t>(m), 0.0), s2(std::size_t(m), 0.0);
    std::size_t nsamp = 0;
    for (double t = burn; t <= T; t += relax / 5.0) {
        walker.advance_to(t);
        for (int l = 0; l < m; ++l) {
            s1[l] += walker.state().lambda[l];
            s2[l] += walker.state().lambda[l] * walker.state().lambda[l];
        }
        ++nsamp;
    }

    GridSpec g;
    g.lo.resize(std::size_t(m));
    g.hi.resize(std::size_t(m));
    g.count.assign(std::size_t(m), points_per_axis);
    for (int l = 0; l < m; ++l) {
        const double mu = s1[l] / double(nsamp);
        const double var = std::max(s2[l] / double(nsamp) - mu * mu, 0.0);
        const double sd = std::sqrt(var);
        double maxd = 0.0;
        for (int j = 0; j < m; ++j) maxd = std::max(maxd, params.d(l, j));
        g.lo[l] = std::max(std::min(mean[l] - 4.0 * sd, params.lambda_inf()[l]), 1e-8);
        g.hi[l] = std::max(mean[l] + 8.0 * sd, params.lambda_inf()[l] + 3.0 * maxd + 1e-6);
    }
    g.validate();
    return g;
}

// ---------- interpolation ----------

double ValueField::interpolate(const std::vector<double>& lambda, bool* clamped) const {
    const int d = grid.dims();
    if (int(lambda.size()) != d) throw std::invalid_argument("field: lambda dimension mismatch");
    bool clip = false;
    int base[3] = {0, 0, 0};
    double frac[3] = {0.0, 0.0, 0.0};
    if (d > 3) throw std::invalid_argument("field: gridded solvers support m <= 3");
    for (int a = 0; a < d; ++a) {
        double x = lambda[a];
        if (x < grid.lo[a]) {
            x = grid.lo[a];
            clip = true;
        }
        if (x > grid.hi[a]) {
            x = grid.hi[a];
            clip = true;
        }
        const double pos = (x - grid.lo[a]) / grid.step(a);
        int i0 = int(std::floor(pos));
        i0 = std::clamp(i0, 0, grid.count[a] - 2);
        base[a] = i0;
        frac[a] = std::clamp(pos - i0, 0.0, 1.0);
    }
    if (clamped) *clamped = clip;
    double acc = 0.0;
    const int corners = 1 << d;
    for (int c = 0; c < corners; ++c) {
        double w = 1.0;
        std::size_t flat = 0;
        for (int a = 0; a < d; ++a) {
            const int bit = (c >> a) & 1;
            w *= bit ? frac[a] : 1.0 - frac[a];
            flat = flat * std::size_t(grid.count[a]) + std::size_t(base[a] + bit);
        }
        acc += w * values[flat];
    }
    return acc;
}

void ValueField::stencil(const std::vector<double>& lambda, std::vector<std::size_t>& nodes,
                         std::vector<double>& weights, bool* clamped) const {
    const int d = grid.dims();
    bool clip = false;
    std::vector<int> base(static_cast<std::size_t>(d));
    std::vector<double> frac(static_cast<std::size_t>(d));
    for (int a = 0; a < d; ++a) {
        double x = lambda[a];
        if (x < grid.lo[a]) {
            x = grid.lo[a];
            clip = true;
        }
        if (x > grid.hi[a]) {
            x = grid.hi[a];
            clip = true;
        }
        const double pos = (x - grid.lo[a]) / grid.step(a);
        int i0 = int(std::floor(pos));
        i0 = std::clamp(i0, 0, grid.count[a] - 2);
        base[a] = i0;
        frac[a] = std::clamp(pos - i0, 0.0, 1.0);
    }
    if (clamped) *clamped = clip;
    nodes.clear();
    weights.clear();
    const int corners = 1 << d;
    for (int c = 0; c < corners; ++c) {
        double w = 1.0;
        std::size_t flat = 0;
        for (int a = 0; a < d; ++a) {
            const int bit = (c >> a) & 1;
            w *= bit ? frac[a] : 1.0 - frac[a];
            flat = flat * std::size_t(grid.count[a]) + std::size_t(base[a] + bit);
        }
        if (w != 0.0) {
            nodes.push_back(flat);
            weights.push_back(w);
        }
    }
}

// ---------- F ----------

namespace {

struct LogFEvaluator {
    const MarketParams* market;
    double beta;
    double k_perp;
    double constant; // 1 - r/beta - log(beta)

    LogFEvaluator(const MarketParams& mp, double b)
        : market(&mp),
          beta(b),
          k_perp(K_perp_log_optimum(mp)),
          constant(1.0 - mp.r() / b - std::log(b)) {}

    double operator()(const std::vector<double>& lambda) const {
        double K = k_perp;
        for (int l = 0; l < market->m(); ++l) {
            const double varpi = class_varpi_log(*market, l, lambda[l]);
            K += class_objective_log(*market, l, lambda[l], varpi);
        }
        return constant + K / beta;
    }
};

} // namespace

double F_of_lambda(const MarketParams& market, double beta, const std::vector<double>& lambda) {
    if (!(beta > 0.0)) throw std::invalid_argument("F_of_lambda: beta must be > 0");
    if (int(lambda.size()) != market.m()) throw std::invalid_argument("F_of_lambda: lambda length");
    return LogFEvaluator(market, beta)(lambda);
}

// ---------- discounted path integrals ----------

namespace {

// int_a^b e^{-disc s} (linear interpolant of fn between endpoints) ds,
// exact in the discount factor so a constant integrand integrates exactly.
double segment_integral(double disc, double a, double b, double fa, double fb) {
    const double h = b - a;
    if (h <= 0.0) return 0.0;
    if (disc == 0.0) return 0.5 * h * (fa + fb);
    const double ea = std::exp(-disc * a);
    const double eb = std::exp(-disc * b);
    const double i0 = (ea - eb) / disc;
    const double i1 = -eb * h / disc + i0 / disc; // int e^{-disc s}(s-a) ds
    return fa * i0 + (fb - fa) * (i1 / h);
}

template <typename Fn>
double discounted_path_integral(const HawkesParams& params, const std::vector<JumpLaw>& laws,
                                double disc, double t_max, double dt, std::uint64_t seed,
                                std::uint64_t path, Fn&& fn) {
    const HawkesPath hp = simulate_hawkes(params, laws, t_max, seed, path);
    const auto& evs = hp.log.events;
    IntensityState st = initial_state(params);
    double acc = 0.0;
    double t_cur = 0.0;
    double val_left = fn(st.lambda);
    double next_grid = dt;
    std::size_t ev = 0;
    while (t_cur < t_max) {
        double t_next = std::min(next_grid, t_max);
        bool is_event = false;
        if (ev < evs.size() && evs[ev].t <= t_next) {
            t_next = evs[ev].t;
            is_event = true;
        }
        st = decay(st, t_next - st.t, params);
        const double val_right = fn(st.lambda); // left limit at t_next
        acc += segment_integral(disc, t_cur, t_next, val_left, val_right);
        if (is_event) {
            st = excite(st, evs[ev].cls, params);
            ++ev;
            val_left = fn(st.lambda);
        } else {
            val_left = val_right;
        }
        if (t_next >= next_grid - 1e-15 * t_max) next_grid += dt;
        t_cur = t_next;
    }
    return acc;
}

HawkesParams with_lambda0(const HawkesParams& p, const std::vector<double>& lambda0) {
    return HawkesParams(p.alpha(), p.lambda_inf(), lambda0, p.d());
}

template <typename Fn>
double sup_abs_over_grid(const GridSpec& grid, Fn&& fn) {
    double s = 0.0;
    for (std::size_t i = 0; i < grid.total(); ++i) s = std::max(s, std::abs(fn(grid.node(i))));
    return s;
}

struct Horizon {
    double t_max;
    double trunc_bound;
};

Horizon resolve_horizon(double sup_abs, double disc, double requested, double tol_tail,
                        const char* what) {
    const double sup = std::max(sup_abs, 1e-300);
    const double required = std::ceil(std::log(sup / (disc * tol_tail)) / disc);
    Horizon h;
    h.t_max = requested > 0.0 ? requested : std::max(required, 1.0);
    h.trunc_bound = std::exp(-disc * h.t_max) * sup / disc;
    if (h.trunc_bound > tol_tail * (1.0 + 1e-9)) {
        std::ostringstream os;
        os << what << ": t_max=" << requested << " too small for tail tolerance " << tol_tail
           << "; required t_max >= " << required;
        throw std::runtime_error(os.str());
    }
    return h;
}

} // namespace

FeynmanKacResult f_feynman_kac(const MarketParams& market, const HawkesParams& hawkes, double beta,
                               const std::vector<double>& lambda0, const FeynmanKacOptions& opt) {
    if (!(beta > 0.0)) throw std::invalid_argument("f_feynman_kac: beta must be > 0");
    if (!hawkes.is_stationary()) {
        throw std::runtime_error("f_feynman_kac: requires a stationary intensity system");
    }
    const LogFEvaluator F(market, beta);
    GridSpec box = default_grid_box(hawkes, 9, opt.seed);
    double sup = sup_abs_over_grid(box, F);
    sup = std::max(sup, std::abs(F(lambda0)));
    const Horizon hor = resolve_horizon(sup, beta, opt.t_max, opt.tol_tail, "f_feynman_kac");

    const HawkesParams from_point = with_lambda0(hawkes, lambda0);
    const std::vector<JumpLaw> laws(std::size_t(hawkes.m()), JumpLaw::deterministic(1.0));
    std::vector<double> slots(opt.paths);
    for_each_index(opt.paths, opt.mode, [&](std::size_t p) {
        slots[p] = discounted_path_integral(from_point, laws, beta, hor.t_max, opt.dt, opt.seed, p, F);
    });
    const MeanStderr ms = mean_stderr(slots);
    FeynmanKacResult out;
    out.value = ms.mean;
    out.stderr_ = ms.stderr_;
    out.trunc_bound = hor.trunc_bound;
    out.t_max = hor.t_max;
    out.paths = opt.paths;
    return out;
}

MeanStderr discounted_integral_mc(const HawkesParams& hawkes, const std::vector<double>& lambda0,
                                  double disc, double t_max, double dt, std::size_t paths,
                                  std::uint64_t seed, Exec mode,
                                  const std::function<double(const std::vector<double>&)>& fn) {
    const HawkesParams from_point = with_lambda0(hawkes, lambda0);
    const std::vector<JumpLaw> laws(std::size_t(hawkes.m()), JumpLaw::deterministic(1.0));
    std::vector<double> slots(paths);
    for_each_index(paths, mode, [&](std::size_t p) {
        slots[p] = discounted_path_integral(from_point, laws, disc, t_max, dt, seed, p, fn);
    });
    return mean_stderr(slots);
}

FieldWithPaths f_field_log(const MarketParams& market, const HawkesParams& hawkes, double beta,
                           const GridSpec& grid, const FeynmanKacOptions& opt) {
    grid.validate();
    if (!hawkes.is_stationary()) {
        throw std::runtime_error("f_field_log: requires a stationary intensity system");
    }
    const LogFEvaluator F(market, beta);
    const double sup = sup_abs_over_grid(grid, F);
    const Horizon hor = resolve_horizon(sup, beta, opt.t_max, opt.tol_tail, "f_field_log");

    const std::size_t N = grid.total();
    const std::size_t P = opt.paths;
    std::vector<HawkesParams> node_params;
    node_params.reserve(N);
    for (std::size_t i = 0; i < N; ++i) node_params.push_back(with_lambda0(hawkes, grid.node(i)));
    const std::vector<JumpLaw> laws(std::size_t(hawkes.m()), JumpLaw::deterministic(1.0));

    FieldWithPaths out;
    out.per_path.assign(N, std::vector<double>(P, 0.0));
    // Paths are keyed by p only: common random numbers across nodes.
    for_each_index(N * P, opt.mode, [&](std::size_t w) {
        const std::size_t node = w / P;
        const std::size_t p = w % P;
        out.per_path[node][p] =
            discounted_path_integral(node_params[node], laws, beta, hor.t_max, opt.dt, opt.seed, p, F);
    });

    out.field.grid = grid;
    out.field.utility = UtilitySpec::log_u(beta);
    out.field.values.resize(N);
    out.field.stderrs.resize(N);
    out.field.mc_paths = P;
    out.field.mc_horizon = hor.t_max;
    out.field.mc_seed = opt.seed;
    for (std::size_t i = 0; i < N; ++i) {
        const MeanStderr ms = mean_stderr(out.per_path[i]);
        out.field.values[i] = ms.mean;
        out.field.stderrs[i] = ms.stderr_;
    }
    out.trunc_bound = hor.trunc_bound;
    out.t_max = hor.t_max;
    return out;
}

// ---------- residual ----------

ResidualReport hjb_residual_log(const MarketParams& market, const HawkesParams& hawkes, double beta,
                                const FieldWithPaths& f) {
    const GridSpec& grid = f.field.grid;
    const int d = grid.dims();
    if (d != hawkes.m()) throw std::invalid_argument("hjb_residual_log: grid dims != m");
    const std::size_t N = grid.total();
    const std::size_t P = f.field.mc_paths;
    const LogFEvaluator F(market, beta);

    ResidualReport rep;
    std::vector<std::size_t> sten_nodes;
    std::vector<double> sten_w;

    for (std::size_t i = 0; i < N; ++i) {
        const std::vector<int> idx = grid.unflatten(i);
        bool interior = true;
        for (int a = 0; a < d; ++a) {
            if (idx[a] == 0 || idx[a] == grid.count[a] - 1) interior = false;
        }
        if (!interior) continue;
        const std::vector<double> lam = grid.node(i);

        // Linear functional res = sum coef_j f_j + F(lam): -beta f_i, central
        // differences for the drift, interpolation stencil for f(lam + d_l).
        std::vector<std::pair<std::size_t, double>> coef;
        coef.emplace_back(i, -beta);
        bool stencil_inside = true;
        double fd_term = 0.0, interp_term = 0.0;
        for (int l = 0; l < d; ++l) {
            const double h = grid.step(l);
            const double drift = hawkes.alpha()[l] * (hawkes.lambda_inf()[l] - lam[l]);
            std::vector<int> up = idx, dn = idx;
            up[l] += 1;
            dn[l] -= 1;
            coef.emplace_back(grid.flatten(up), drift / (2.0 * h));
            coef.emplace_back(grid.flatten(dn), -drift / (2.0 * h));

            // Third-derivative estimate for the FD truncation |drift| h^2 f'''/6.
            double f3 = 0.0;
            if (idx[l] >= 2 && idx[l] + 2 <= grid.count[l] - 1) {
                std::vector<int> m2 = idx, m1 = idx, p1 = idx, p2 = idx;
                m2[l] -= 2;
                m1[l] -= 1;
                p1[l] += 1;
                p2[l] += 2;
                f3 = (f.field.values[grid.flatten(p2)] - 2.0 * f.field.values[grid.flatten(p1)] +
                      2.0 * f.field.values[grid.flatten(m1)] - f.field.values[grid.flatten(m2)]) /
                     (2.0 * h * h * h);
            }
            fd_term += std::abs(drift) * h * h * std::abs(f3) / 6.0;

            // Jump term lambda_l (f(lam + d_col_l) - f(lam)).
            std::vector<double> shifted = lam;
            for (int a = 0; a < d; ++a) shifted[a] += hawkes.d(a, l);
            bool clamped = false;
            f.field.stencil(shifted, sten_nodes, sten_w, &clamped);
            if (clamped) stencil_inside = false;
            for (std::size_t s = 0; s < sten_nodes.size(); ++s) {
                coef.emplace_back(sten_nodes[s], lam[l] * sten_w[s]);
            }
            coef.emplace_back(i, -lam[l]);

            // Multilinear interpolation error ~ sum_a h_a^2 |f''_a| / 8 at the cell.
            double interp_err = 0.0;
            for (int a = 0; a < d; ++a) {
                double f2 = 0.0;
                if (idx[a] >= 1 && idx[a] + 1 <= grid.count[a] - 1) {
                    std::vector<int> m1 = idx, p1 = idx;
                    m1[a] -= 1;
                    p1[a] += 1;
                    f2 = (f.field.values[grid.flatten(p1)] - 2.0 * f.field.values[i] +
                          f.field.values[grid.flatten(m1)]) /
                         (grid.step(a) * grid.step(a));
                }
                interp_err += grid.step(a) * grid.step(a) * std::abs(f2) / 8.0;
            }
            interp_term += lam[l] * interp_err;
        }
        if (!stencil_inside) continue; // clamped extrapolation would bias the check

        const double Fi = F(lam);
        // Per-path residual samples give the exact MC error of the functional.
        double mean = 0.0;
        std::vector<double> samples(P, Fi);
        for (const auto& [nodeidx, c] : coef) {
            const auto& row = f.per_path[nodeidx];
            for (std::size_t p = 0; p < P; ++p) samples[p] += c * row[p];
        }
        const MeanStderr ms = mean_stderr(samples);
        mean = ms.mean;

        rep.interior.push_back(i);
        rep.residual.push_back(mean);
        rep.budget.push_back(3.0 * ms.stderr_ + 2.0 * (fd_term + interp_term) +
                             (beta + 1.0) * f.trunc_bound);
    }

    std::size_t pass = 0;
    for (std::size_t t = 0; t < rep.residual.size(); ++t) {
        if (std::abs(rep.residual[t]) <= rep.budget[t]) ++pass;
    }
    rep.pass_fraction = rep.residual.empty() ? 0.0 : double(pass) / double(rep.residual.size());
    return rep;
}

// ---------- transversality ----------

TransversalityReport transversality_check(const MarketParams& market, const HawkesParams& hawkes,
                                          double beta, const ValueField& f_field,
                                          const TransversalityOptions& opt) {
    if (opt.t_grid.empty()) throw std::invalid_argument("transversality: empty t grid");
    const double t_end = opt.t_grid.back();
    const std::size_t nT = opt.t_grid.size();

    const PolicyFn policy = log_optimal_policy(market, beta);
    MarketSimConfig cfg;
    cfg.x0 = opt.x0;
    cfg.T = t_end;
    cfg.dt = opt.dt;
    cfg.log_space = opt.log_space;
    cfg.record_path = true;

    std::vector<std::vector<double>> vals(nT, std::vector<double>(opt.paths, 0.0));
    std::vector<char> ok(opt.paths, 0);
    for_each_index(opt.paths, opt.mode, [&](std::size_t p) {
        const SimPath path = simulate_market(market, hawkes, policy, cfg, opt.seed, p);
        if (path.status != PathStatus::ok) return;
        ok[p] = 1;
        std::size_t row = 0;
        for (std::size_t ti = 0; ti < nT; ++ti) {
            const double t = opt.t_grid[ti];
            while (row + 1 < path.times.size() && path.times[row] < t - 1e-12) ++row;
            const double fval = f_field.interpolate(path.lambda[row]);
            vals[ti][p] =
                std::exp(-beta * t) * (fval + std::log(path.wealth[row]) / beta);
        }
    });

    TransversalityReport rep;
    std::size_t n_ok = 0;
    for (char c : ok) n_ok += std::size_t(c);
    rep.ruin_fraction = 1.0 - double(n_ok) / double(opt.paths);
    rep.ruin_warning = rep.ruin_fraction > 0.01;
    for (std::size_t ti = 0; ti < nT; ++ti) {
        std::vector<double> kept;
        kept.reserve(n_ok);
        for (std::size_t p = 0; p < opt.paths; ++p) {
            if (ok[p]) kept.push_back(vals[ti][p]);
        }
        const MeanStderr ms = mean_stderr(kept);
        rep.rows.push_back(TransversalityRow{opt.t_grid[ti], ms.mean, ms.stderr_});
    }
    const auto& last = rep.rows.back();
    rep.decays_to_zero = std::abs(last.estimate) <= 3.0 * std::max(last.stderr_, 1e-300);
    return rep;
}

// ---------- fixed points ----------

namespace {

struct FixedPointCore {
    const MarketParams* market;
    const HawkesParams* hawkes;
    double disc = 0.0;
    std::vector<std::vector<double>> d_cols;
    std::atomic<long long> clamped{0};
    std::atomic<bool> positivity_ok{true};

    FixedPointCore(const MarketParams& mp, const HawkesParams& hp) : market(&mp), hawkes(&hp) {
        for (int l = 0; l < hp.m(); ++l) d_cols.push_back(hp.d_column(l));
    }
};

// Distorted intensities h_l = lambda_l g(lambda + d_l) / g(lambda).
template <typename Scratch>
bool distort(const FixedPointCore& core, const ValueField& g, const std::vector<double>& lambda,
             Scratch& shifted, std::vector<double>& h, double& gv, bool count_clamp) {
    gv = g.interpolate(lambda);
    if (!(gv > 0.0)) return false;
    const int m = core.hawkes->m();
    for (int l = 0; l < m; ++l) {
        for (int a = 0; a < m; ++a) shifted[a] = lambda[a] + core.d_cols[std::size_t(l)][a];
        bool clamped = false;
        const double gdl = g.interpolate(shifted, &clamped);
        if (clamped && count_clamp) {
            const_cast<FixedPointCore&>(core).clamped.fetch_add(1, std::memory_order_relaxed);
        }
        if (!(gdl > 0.0)) return false;
        h[l] = lambda[l] * (gdl / gv);
    }
    return true;
}

struct IterationEngine {
    FixedPointCore& core;
    const GridSpec& grid;
    const FixedPointOptions& opt;
    double t_max = 0.0;

    template <typename GEval>
    ValueField iterate_once(const ValueField& g_cur, GEval&& geval, std::vector<double>& stderrs) {
        const std::size_t N = grid.total();
        const std::size_t P = opt.paths;
        std::vector<HawkesParams> node_params;
        node_params.reserve(N);
        for (std::size_t i = 0; i < N; ++i) {
            node_params.push_back(
                HawkesParams(core.hawkes->alpha(), core.hawkes->lambda_inf(), grid.node(i),
                             core.hawkes->d()));
        }
        const std::vector<JumpLaw> laws(std::size_t(core.hawkes->m()), JumpLaw::deterministic(1.0));
        std::vector<double> slots(N * P, 0.0);
        for_each_index(N * P, opt.mode, [&](std::size_t w) {
            const std::size_t node = w / P;
            const std::size_t p = w % P;
            slots[w] = discounted_path_integral(
                node_params[node], laws, core.disc, t_max, opt.dt, opt.seed, p,
                [&](const std::vector<double>& lam) { return geval(g_cur, lam); });
        });
        ValueField next = g_cur;
        stderrs.assign(N, 0.0);
        for (std::size_t i = 0; i < N; ++i) {
            std::vector<double> row(slots.begin() + long(i * P), slots.begin() + long((i + 1) * P));
            const MeanStderr ms = mean_stderr(row);
            next.values[i] = ms.mean;
            stderrs[i] = ms.stderr_;
        }
        return next;
    }
};

std::string dump_iterations(const std::vector<IterationRecord>& recs) {
    std::ostringstream os;
    for (const auto& r : recs) {
        os << " iter " << r.iter << ": sup_change=" << r.sup_change
           << " rel=" << r.sup_rel_change << (r.contraction ? " (contraction)" : "") << ";";
    }
    return os.str();
}

template <typename GEval, typename Finalize>
FixedPointResult run_fixed_point(const MarketParams& market, const HawkesParams& hawkes,
                                 const UtilitySpec& utility, const GridSpec& grid,
                                 const FixedPointOptions& opt, double disc, double g0,
                                 GEval&& geval, Finalize&& finalize, const char* what) {
    grid.validate();
    if (grid.dims() != hawkes.m()) throw std::invalid_argument("fixed point: grid dims != m");
    if (!(disc > 0.0)) {
        std::ostringstream os;
        os << what << ": effective discount " << disc << " must be > 0";
        throw std::invalid_argument(os.str());
    }

    FixedPointCore core(market, hawkes);
    core.disc = disc;

    FixedPointResult out;
    out.g.grid = grid;
    out.g.utility = utility;
    out.g.values.assign(grid.total(), g0);
    out.g.stderrs.assign(grid.total(), 0.0);
    out.g.mc_paths = opt.paths;
    out.g.mc_seed = opt.seed;

    // Horizon from the initial iterate, held fixed so the common random
    // numbers keep the contraction diagnostic meaningful.
    const double supG = sup_abs_over_grid(
        grid, [&](const std::vector<double>& lam) { return geval(core, out.g, lam); });
    const Horizon hor = resolve_horizon(supG, disc, opt.t_max, opt.tol_tail, what);
    out.t_max = hor.t_max;
    out.g.mc_horizon = hor.t_max;

    IterationEngine engine{core, grid, opt, hor.t_max};
    double prev_sup_change = -1.0;
    int consecutive = 0;
    double last_rel = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= opt.max_iters; ++it) {
        std::vector<double> stderrs;
        ValueField next = engine.iterate_once(
            out.g,
            [&](const ValueField& g_cur, const std::vector<double>& lam) {
                return geval(core, g_cur, lam);
            },
            stderrs);
        if (!core.positivity_ok.load()) {
            throw std::runtime_error(std::string(what) + ": g lost positivity during evaluation;" +
                                     dump_iterations(out.iterations));
        }
        double sup_change = 0.0, sup_old = 0.0, min_new = next.values[0];
        for (std::size_t i = 0; i < next.values.size(); ++i) {
            sup_change = std::max(sup_change, std::abs(next.values[i] - out.g.values[i]));
            sup_old = std::max(sup_old, std::abs(out.g.values[i]));
            min_new = std::min(min_new, next.values[i]);
        }
        IterationRecord rec;
        rec.iter = it;
        rec.sup_change = sup_change;
        rec.sup_rel_change = sup_change / std::max(sup_old, 1e-300);
        rec.contraction = prev_sup_change >= 0.0 && sup_change < prev_sup_change;
        consecutive = rec.contraction ? consecutive + 1 : 0;
        out.iterations.push_back(rec);
        prev_sup_change = sup_change;
        last_rel = rec.sup_rel_change;

        if (!(min_new > 0.0)) {
            std::ostringstream os;
            os << what << ": iterate " << it << " lost positivity (min g = " << min_new << ");"
               << dump_iterations(out.iterations);
            throw std::runtime_error(os.str());
        }
        out.g.values = next.values;
        out.g.stderrs = stderrs;
        if (last_rel < opt.tol) break;
    }
    const int needed = std::min(3, std::max(int(out.iterations.size()) - 1, 0));
    out.converged = last_rel < opt.tol && consecutive >= needed;
    finalize(core, out);
    return out;
}

} // namespace

FixedPointResult g_fixed_point_power(const MarketParams& market, const HawkesParams& hawkes,
                                     const UtilitySpec& utility, const GridSpec& grid,
                                     const FixedPointOptions& opt) {
    utility.validate();
    if (utility.kind != UtilitySpec::Kind::power) {
        throw std::invalid_argument("g_fixed_point_power: utility must be power");
    }
    const double gamma = utility.gamma;
    const double disc = utility.beta - market.r() * gamma;
    const double k_perp = K_perp_power_optimum(market, gamma);
    const double g0 = 1.0; // the canonical starting iterate

    auto geval = [gamma, k_perp, &market](const FixedPointCore& core, const ValueField& g,
                                          const std::vector<double>& lam) -> double {
        thread_local std::vector<double> shifted, h;
        shifted.assign(lam.size(), 0.0);
        h.assign(lam.size(), 0.0);
        double gv = 0.0;
        if (!distort(core, g, lam, shifted, h, gv, true)) {
            const_cast<FixedPointCore&>(core).positivity_ok.store(false);
            return 0.0;
        }
        double K = k_perp;
        for (int l = 0; l < market.m(); ++l) {
            const double varpi = class_varpi_power(market, l, h[l], gamma);
            K += class_objective_power(market, l, h[l], gamma, varpi);
        }
        return (1.0 - gamma) * std::pow(gv, gamma / (gamma - 1.0)) - gv * K;
    };

    auto finalize = [gamma, &market](FixedPointCore& core, FixedPointResult& out) {
        const std::size_t N = out.g.grid.total();
        out.h_grid.assign(N, std::vector<double>(std::size_t(market.m()), 0.0));
        out.weight_grid.assign(N, std::vector<double>(std::size_t(market.m()), 0.0));
        out.consumption_grid.assign(N, 0.0);
        std::vector<double> shifted(std::size_t(market.m()));
        for (std::size_t i = 0; i < N; ++i) {
            const std::vector<double> lam = out.g.grid.node(i);
            double gv = 0.0;
            distort(core, out.g, lam, shifted, out.h_grid[i], gv, false);
            for (int l = 0; l < market.m(); ++l) {
                out.weight_grid[i][l] =
                    class_varpi_power(market, l, out.h_grid[i][l], gamma) / market.k();
            }
            out.consumption_grid[i] = std::pow(gv, 1.0 / (gamma - 1.0));
        }
    };

    return run_fixed_point(market, hawkes, utility, grid, opt, disc, g0, geval, finalize,
                           "g_fixed_point_power");
}

FixedPointResult g_fixed_point_exponential(const MarketParams& market, const HawkesParams& hawkes,
                                           const UtilitySpec& utility, const GridSpec& grid,
                                           const FixedPointOptions& opt) {
    utility.validate();
    if (utility.kind != UtilitySpec::Kind::exponential) {
        throw std::invalid_argument("g_fixed_point_exponential: utility must be exponential");
    }
    const double r = market.r();
    const double kappa = utility.kappa(r);
    if (!(kappa > 0.0)) throw std::invalid_argument("g_fixed_point_exponential: r*gamma must be > 0");
    const double disc = utility.beta - r + r * std::log(kappa);
    const double k_perp = K_perp_exponential_optimum(market, kappa);

    // No-jump constant solution exp((K_nojump - disc)/r); the spec-ordained
    // g0 = 1 start typically maps below zero on the first sweep.
    double k_nojump = k_perp;
    for (int l = 0; l < market.m(); ++l) {
        const double q = market.kappa1(l) / market.k();
        const double Rb = market.Rbar()[l];
        k_nojump += -Rb * Rb / (2.0 * q);
    }
    const double g0 = opt.start_from_merton ? std::exp((k_nojump - disc) / r) : 1.0;

    auto geval = [kappa, k_perp, r, &market](const FixedPointCore& core, const ValueField& g,
                                             const std::vector<double>& lam) -> double {
        thread_local std::vector<double> shifted, h;
        shifted.assign(lam.size(), 0.0);
        h.assign(lam.size(), 0.0);
        double gv = 0.0;
        if (!distort(core, g, lam, shifted, h, gv, true)) {
            const_cast<FixedPointCore&>(core).positivity_ok.store(false);
            return 0.0;
        }
        double K = k_perp;
        for (int l = 0; l < market.m(); ++l) {
            const double Pi = class_Pi_exponential(market, l, h[l], kappa);
            K += class_objective_exponential(market, l, h[l], kappa, Pi);
        }
        return gv * (K - r * std::log(gv));
    };

    auto finalize = [kappa, &market](FixedPointCore& core, FixedPointResult& out) {
        const std::size_t N = out.g.grid.total();
        const double gamma = out.g.utility.gamma;
        out.h_grid.assign(N, std::vector<double>(std::size_t(market.m()), 0.0));
        out.weight_grid.assign(N, std::vector<double>(std::size_t(market.m()), 0.0));
        out.consumption_grid.assign(N, 0.0);
        std::vector<double> shifted(std::size_t(market.m()));
        for (std::size_t i = 0; i < N; ++i) {
            const std::vector<double> lam = out.g.grid.node(i);
            double gv = 0.0;
            distort(core, out.g, lam, shifted, out.h_grid[i], gv, false);
            for (int l = 0; l < market.m(); ++l) {
                out.weight_grid[i][l] =
                    class_Pi_exponential(market, l, out.h_grid[i][l], kappa) / market.k();
            }
            // Wealth-independent part of C* = r x + (-log g - log kappa)/gamma.
            out.consumption_grid[i] = (-std::log(gv) - std::log(kappa)) / gamma;
        }
    };

    return run_fixed_point(market, hawkes, utility, grid, opt, disc, g0, geval, finalize,
                           "g_fixed_point_exponential");
}

} // namespace contagion
