// Command-line front end: config loading, subcommands, deterministic seeding,
// CSV/JSON emission. Every stochastic output is a pure function of
// (config, seed) regardless of the OpenMP worker count.

#include "contagion/charfn.hpp"
#include "contagion/csv.hpp"
#include "contagion/filter.hpp"
#include "contagion/io_json.hpp"
#include "contagion/market.hpp"
#include "contagion/policy.hpp"
#include "contagion/simulate.hpp"
#include "contagion/value.hpp"
#include "contagion/version.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace contagion;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 1;
    std::size_t paths = 10000;
    double horizon = 1.0;
    double dt = 1.0 / 252.0;
    std::string grid_spec = "auto";
    double tol = 1e-6;
};

json options_json(const CommonOpts& o, const std::string& subcommand) {
    return json{{"subcommand", subcommand}, {"seed", o.seed},     {"paths", o.paths},
                {"horizon", o.horizon},     {"dt", o.dt},         {"grid", o.grid_spec},
                {"tol", o.tol},             {"out", o.out_dir}};
}

void write_sidecar(const fs::path& data_file, const RunConfig& cfg, const json& options) {
    json meta{{"tool", kToolName},
              {"version", kToolVersion},
              {"options", options},
              {"config", cfg.raw}};
    fs::path meta_path = data_file;
    meta_path += ".meta.json";
    std::ofstream out(meta_path, std::ios::binary);
    out << meta.dump(2) << "\n";
}

void write_json_output(const fs::path& file, const RunConfig& cfg, const json& options,
                       json payload) {
    payload["meta"] = json{{"tool", kToolName}, {"version", kToolVersion}, {"options", options},
                           {"config", cfg.raw}};
    std::ofstream out(file, std::ios::binary);
    out << payload.dump(2) << "\n";
}

const MarketParams& need_market(const RunConfig& cfg) {
    if (!cfg.market) throw ConfigError("market", "section required for this subcommand");
    return *cfg.market;
}

const HawkesParams& need_hawkes(const RunConfig& cfg) {
    if (!cfg.hawkes) throw ConfigError("hawkes", "section required for this subcommand");
    return *cfg.hawkes;
}

UtilitySpec need_utility(const RunConfig& cfg) {
    if (!cfg.utility) throw ConfigError("utility", "section required for this subcommand");
    return *cfg.utility;
}

GridSpec parse_grid(const std::string& spec, const HawkesParams& hawkes, std::uint64_t seed,
                    int default_points = 17) {
    if (spec == "auto" || spec.empty()) return default_grid_box(hawkes, default_points, seed);
    GridSpec g;
    std::stringstream ss(spec);
    std::string axis;
    while (std::getline(ss, axis, ';')) {
        double lo, hi;
        int n;
        if (std::sscanf(axis.c_str(), "%lf:%lf:%d", &lo, &hi, &n) != 3) {
            throw ConfigError("--grid", "expected lo:hi:count[;lo:hi:count...] or 'auto'");
        }
        g.lo.push_back(lo);
        g.hi.push_back(hi);
        g.count.push_back(n);
    }
    if (g.dims() != hawkes.m()) throw ConfigError("--grid", "one axis per jump class required");
    g.validate();
    return g;
}

std::vector<std::string> simpath_header(int m, int n) {
    std::vector<std::string> h{"t"};
    for (int l = 1; l <= m; ++l) h.push_back("lambda_" + std::to_string(l));
    for (int l = 1; l <= m; ++l) h.push_back("N_" + std::to_string(l));
    for (int i = 0; i <= n; ++i) h.push_back("S_" + std::to_string(i));
    h.push_back("X");
    for (int i = 1; i <= n; ++i) h.push_back("omega_" + std::to_string(i));
    h.push_back("C");
    return h;
}

void write_simpath_csv(const fs::path& file, const SimPath& path, int m, int n) {
    CsvWriter csv(file.string());
    csv.header(simpath_header(m, n));
    for (std::size_t i = 0; i < path.times.size(); ++i) {
        std::vector<double> row{path.times[i]};
        for (int l = 0; l < m; ++l) row.push_back(path.lambda[i][l]);
        for (int l = 0; l < m; ++l) row.push_back(double(path.counts[i][l]));
        for (int a = 0; a <= n; ++a) row.push_back(path.prices[i][a]);
        row.push_back(path.wealth[i]);
        for (int a = 0; a < n; ++a) row.push_back(path.weights[i][a]);
        row.push_back(path.consumption[i]);
        csv.row(row);
    }
}

void write_events_csv(const fs::path& file, const EventLog& log) {
    CsvWriter csv(file.string());
    csv.header({"t", "class", "z"});
    for (const auto& ev : log.events) {
        csv.line({fmt17(ev.t), std::to_string(ev.cls + 1), fmt17(ev.z)});
    }
}

json policy_result_json(const PolicyResult& pr) {
    json diags = json::array();
    for (const auto& d : pr.diagnostics) {
        diags.push_back(json{{"varpi", d.varpi},
                             {"foc_residual", d.foc_residual},
                             {"objective", d.objective},
                             {"provenance", d.provenance}});
    }
    return json{{"omega_bar", pr.omega_bar},
                {"omega_perp", pr.omega_perp},
                {"omega_full", pr.omega_full},
                {"omega0", pr.omega0},
                {"consumption_rate_fraction", pr.consumption_rate_fraction},
                {"objective_K", pr.objective_K},
                {"diagnostics", diags}};
}

// ---- subcommands ----

int cmd_simulate(const RunConfig& cfg, const CommonOpts& o, std::size_t n_paths_out) {
    const MarketParams& market = need_market(cfg);
    const HawkesParams& hawkes = need_hawkes(cfg);
    PolicyFn policy = cfg.utility && cfg.utility->kind == UtilitySpec::Kind::log_utility
                          ? log_optimal_policy(market, cfg.utility->beta)
                          : riskless_only_policy(market.n());
    MarketSimConfig sim;
    sim.T = o.horizon;
    sim.dt = o.dt;
    const json opts = options_json(o, "simulate");
    for (std::size_t p = 0; p < n_paths_out; ++p) {
        const SimPath path = simulate_market(market, hawkes, policy, sim, o.seed, p);
        char tag[24];
        std::snprintf(tag, sizeof(tag), "%03zu", p);
        const fs::path pf = fs::path(o.out_dir) / ("simpath_" + std::string(tag) + ".csv");
        const fs::path ef = fs::path(o.out_dir) / ("events_" + std::string(tag) + ".csv");
        write_simpath_csv(pf, path, market.m(), market.n());
        write_events_csv(ef, path.events);
        write_sidecar(pf, cfg, opts);
        write_sidecar(ef, cfg, opts);
    }
    std::cout << "simulate: wrote " << n_paths_out << " path(s) to " << o.out_dir << "\n";
    return 0;
}

int cmd_policy(const RunConfig& cfg, const CommonOpts& o, const std::string& lambda_arg,
               const std::string& lambda_grid_arg) {
    const MarketParams& market = need_market(cfg);
    const double beta = cfg.utility ? cfg.utility->beta : 0.05;

    std::vector<double> lambda(std::size_t(market.m()), 0.0);
    if (!lambda_arg.empty()) {
        std::stringstream ss(lambda_arg);
        std::string tok;
        lambda.clear();
        while (std::getline(ss, tok, ',')) lambda.push_back(std::stod(tok));
        if (int(lambda.size()) != market.m()) {
            throw ConfigError("--lambda", "need one intensity per jump class");
        }
    }
    const PolicyResult pr = solve_log_policy(market, lambda, beta);
    const json opts = options_json(o, "policy");
    const fs::path jf = fs::path(o.out_dir) / "policy.json";
    write_json_output(jf, cfg, opts, policy_result_json(pr));

    // omega_bar_l as a function of its own intensity (the separation makes
    // class l depend on lambda_l only).
    double lo = 0.0, hi = 5.0;
    int n = 101;
    if (!lambda_grid_arg.empty() && lambda_grid_arg != "auto") {
        if (std::sscanf(lambda_grid_arg.c_str(), "%lf:%lf:%d", &lo, &hi, &n) != 3) {
            throw ConfigError("--lambda-grid", "expected lo:hi:count");
        }
    }
    const fs::path gf = fs::path(o.out_dir) / "omega_grid.csv";
    CsvWriter csv(gf.string());
    std::vector<std::string> hdr{"lambda"};
    for (int l = 1; l <= market.m(); ++l) hdr.push_back("omega_bar_" + std::to_string(l));
    csv.header(hdr);
    for (int i = 0; i < n; ++i) {
        const double lam = lo + (hi - lo) * i / (n - 1);
        std::vector<double> row{lam};
        for (int l = 0; l < market.m(); ++l) {
            row.push_back(class_varpi_log(market, l, lam) / market.k());
        }
        csv.row(row);
    }
    write_sidecar(gf, cfg, opts);
    std::cout << "policy: wrote policy.json and omega_grid.csv to " << o.out_dir << "\n";
    return 0;
}

void write_value_field_csv(const fs::path& file, const ValueField& field,
                           const std::string& value_name) {
    CsvWriter csv(file.string());
    std::vector<std::string> hdr;
    for (int a = 1; a <= field.grid.dims(); ++a) hdr.push_back("lambda_" + std::to_string(a));
    hdr.push_back(value_name);
    hdr.push_back("stderr");
    csv.header(hdr);
    for (std::size_t i = 0; i < field.grid.total(); ++i) {
        std::vector<double> row = field.grid.node(i);
        row.push_back(field.values[i]);
        row.push_back(field.stderrs.empty() ? 0.0 : field.stderrs[i]);
        csv.row(row);
    }
}

json grid_json(const GridSpec& g) {
    return json{{"lo", g.lo}, {"hi", g.hi}, {"count", g.count}};
}

int cmd_value(const RunConfig& cfg, const CommonOpts& o) {
    const MarketParams& market = need_market(cfg);
    const HawkesParams& hawkes = need_hawkes(cfg);
    const UtilitySpec utility = need_utility(cfg);
    const json opts = options_json(o, "value");

    if (utility.kind == UtilitySpec::Kind::log_utility) {
        const GridSpec grid = parse_grid(o.grid_spec, hawkes, o.seed, 17);
        FeynmanKacOptions fk;
        fk.paths = o.paths;
        fk.seed = o.seed;
        fk.t_max = o.horizon > 1.0 ? o.horizon : 0.0;
        const FieldWithPaths f = f_field_log(market, hawkes, utility.beta, grid, fk);
        const fs::path vf = fs::path(o.out_dir) / "value_field.csv";
        write_value_field_csv(vf, f.field, "f");
        write_sidecar(vf, cfg, opts);

        const ResidualReport rr = hjb_residual_log(market, hawkes, utility.beta, f);
        const fs::path rf = fs::path(o.out_dir) / "hjb_residual.csv";
        {
            CsvWriter csv(rf.string());
            csv.header({"node", "residual", "budget", "pass"});
            for (std::size_t t = 0; t < rr.interior.size(); ++t) {
                csv.line({std::to_string(rr.interior[t]), fmt17(rr.residual[t]),
                          fmt17(rr.budget[t]),
                          std::abs(rr.residual[t]) <= rr.budget[t] ? "1" : "0"});
            }
        }
        write_sidecar(rf, cfg, opts);

        TransversalityOptions tv;
        tv.paths = std::max<std::size_t>(o.paths / 10, 200);
        tv.seed = o.seed;
        const double t_end = std::max(o.horizon, 20.0);
        for (int i = 0; i <= 10; ++i) tv.t_grid.push_back(t_end * i / 10.0);
        const TransversalityReport tr =
            transversality_check(market, hawkes, utility.beta, f.field, tv);
        const fs::path tf = fs::path(o.out_dir) / "transversality.csv";
        {
            CsvWriter csv(tf.string());
            csv.header({"t", "estimate", "stderr"});
            for (const auto& rw : tr.rows) csv.row({rw.t, rw.estimate, rw.stderr_});
        }
        write_sidecar(tf, cfg, opts);

        write_json_output(fs::path(o.out_dir) / "value_report.json", cfg, opts,
                          json{{"utility", utility_to_json(utility)},
                               {"grid", grid_json(grid)},
                               {"t_max", f.t_max},
                               {"trunc_bound", f.trunc_bound},
                               {"residual_pass_fraction", rr.pass_fraction},
                               {"transversality_decays", tr.decays_to_zero},
                               {"ruin_fraction", tr.ruin_fraction}});
        std::cout << "value: residual pass fraction " << rr.pass_fraction
                  << ", transversality decays: " << (tr.decays_to_zero ? "yes" : "no") << "\n";
        return 0;
    }

    const GridSpec grid = parse_grid(o.grid_spec, hawkes, o.seed, 17);
    FixedPointOptions fp;
    fp.paths = std::max<std::size_t>(o.paths / 4, 500);
    fp.seed = o.seed;
    fp.tol = o.tol;
    fp.start_from_merton = utility.kind == UtilitySpec::Kind::exponential;
    const FixedPointResult res =
        utility.kind == UtilitySpec::Kind::power
            ? g_fixed_point_power(market, hawkes, utility, grid, fp)
            : g_fixed_point_exponential(market, hawkes, utility, grid, fp);

    const fs::path vf = fs::path(o.out_dir) / "value_field.csv";
    write_value_field_csv(vf, res.g, "g");
    write_sidecar(vf, cfg, opts);

    json iters = json::array();
    for (const auto& it : res.iterations) {
        iters.push_back(json{{"iter", it.iter},
                             {"sup_change", it.sup_change},
                             {"sup_rel_change", it.sup_rel_change},
                             {"contraction", it.contraction}});
    }
    json payload{{"utility", utility_to_json(utility)},
                 {"grid", grid_json(grid)},
                 {"t_max", res.t_max},
                 {"converged", res.converged},
                 {"iterations", iters}};
    if (utility.kind == UtilitySpec::Kind::exponential) {
        payload["kappa"] = utility.kappa(market.r());
    }
    write_json_output(fs::path(o.out_dir) / "value_report.json", cfg, opts, payload);
    std::cout << "value: " << utility.kind_name() << " fixed point "
              << (res.converged ? "converged" : "did not converge") << " in "
              << res.iterations.size() << " iterations\n";
    return 0;
}

int cmd_charfn(const RunConfig& cfg, const CommonOpts& o) {
    const HawkesParams& hawkes = need_hawkes(cfg);
    std::vector<double> u_values{0.5, 1.0, 2.0};
    std::vector<double> T_values{0.5, 1.0, 2.0};
    std::vector<double> v(std::size_t(hawkes.m()), 0.0);
    if (cfg.raw.contains("charfn")) {
        const json& cj = cfg.raw["charfn"];
        if (cj.contains("u_values")) u_values = cj["u_values"].get<std::vector<double>>();
        if (cj.contains("T_values")) T_values = cj["T_values"].get<std::vector<double>>();
        if (cj.contains("v")) v = cj["v"].get<std::vector<double>>();
    }
    if (int(v.size()) != hawkes.m()) throw ConfigError("charfn.v", "length must equal m");
    const json opts = options_json(o, "charfn");
    const fs::path f = fs::path(o.out_dir) / "charfn.csv";
    CsvWriter csv(f.string());
    csv.header({"u", "v", "T", "re_phi", "im_phi", "re_phi_mc", "im_phi_mc", "stderr"});
    for (double T : T_values) {
        for (double uu : u_values) {
            const std::vector<double> u(std::size_t(hawkes.m()), uu);
            const CharFnResult rs = riccati_solve(hawkes, u, v, T);
            const CharFnMC mc = charfn_mc(hawkes, u, v, T, o.paths, o.seed);
            csv.row({uu, v[0], T, rs.phi.real(), rs.phi.imag(), mc.phi.real(), mc.phi.imag(),
                     mc.stderr_norm()});
        }
    }
    write_sidecar(f, cfg, opts);
    std::cout << "charfn: wrote " << (u_values.size() * T_values.size()) << " rows to "
              << f.string() << "\n";
    return 0;
}

int cmd_filter(const RunConfig& cfg, const CommonOpts& o, const std::string& input, int window,
               double threshold, bool calibrate) {
    std::string in_path = input;
    if (in_path.empty() && cfg.raw.contains("filter") && cfg.raw["filter"].contains("input")) {
        in_path = cfg.raw["filter"]["input"].get<std::string>();
    }
    if (in_path.empty()) throw ConfigError("filter.input", "no returns CSV supplied");
    const ReturnsCsv data = read_returns_csv(in_path);

    DetectOptions det;
    det.window = window;
    det.threshold = threshold;
    const EventStream events = detect_jumps(data.columns, det);

    const HawkesParams& hawkes = need_hawkes(cfg);
    const json opts = options_json(o, "filter");

    const IntensityTrajectory traj = filter_intensity(events, hawkes, o.dt);
    const fs::path f = fs::path(o.out_dir) / "filtered_intensity.csv";
    {
        CsvWriter csv(f.string());
        std::vector<std::string> hdr{"t"};
        for (int l = 1; l <= events.m(); ++l) hdr.push_back("lambda_" + std::to_string(l));
        for (int l = 1; l <= events.m(); ++l) hdr.push_back("event_" + std::to_string(l));
        csv.header(hdr);
        for (std::size_t i = 0; i < traj.times.size(); ++i) {
            std::vector<double> row{traj.times[i]};
            for (int l = 0; l < events.m(); ++l) row.push_back(traj.lambda[i][l]);
            for (int l = 0; l < events.m(); ++l) row.push_back(double(traj.event_mark[i][l]));
            csv.row(row);
        }
    }
    write_sidecar(f, cfg, opts);

    if (calibrate) {
        const MleResult fit = calibrate_mle(events, events.horizon, hawkes);
        write_json_output(fs::path(o.out_dir) / "calibration.json", cfg, opts,
                          json{{"params", hawkes_to_json(fit.params)},
                               {"loglik", fit.loglik},
                               {"converged", fit.converged},
                               {"iterations", fit.iterations},
                               {"stderr_alpha", fit.stderr_alpha},
                               {"stderr_lambda_inf", fit.stderr_lambda_inf},
                               {"stderr_d", fit.stderr_d}});
    }
    std::size_t total_events = 0;
    for (const auto& ts : events.times) total_events += ts.size();
    std::cout << "filter: " << total_events << " events detected across " << events.m()
              << " class(es)\n";
    return 0;
}

int cmd_moments(const RunConfig& cfg, const CommonOpts& o) {
    const HawkesParams& hawkes = need_hawkes(cfg);
    const json opts = options_json(o, "moments");
    const std::vector<double> mean = hawkes.stationary_mean();

    // Ergodic check: exact time-average of lambda over one long path (the
    // compensator divided by T), batch means for the standard error.
    const double T = std::max(o.horizon, 500.0);
    const int n_batches = 20;
    const std::vector<JumpLaw> laws(std::size_t(hawkes.m()), JumpLaw::deterministic(1.0));
    const HawkesPath hp = simulate_hawkes(hawkes, laws, T, o.seed, 0);
    std::vector<std::vector<double>> batch(static_cast<std::size_t>(n_batches));
    std::vector<double> prev(std::size_t(hawkes.m()), 0.0);
    for (int b = 0; b < n_batches; ++b) {
        const double tb = T * (b + 1) / n_batches;
        const std::vector<double> cum = compensator(hawkes, hp.log, tb);
        std::vector<double> avg(static_cast<std::size_t>(hawkes.m()));
        for (int l = 0; l < hawkes.m(); ++l) avg[l] = (cum[l] - prev[l]) / (T / n_batches);
        batch[b] = avg;
        prev = cum;
    }
    json per_class = json::array();
    for (int l = 0; l < hawkes.m(); ++l) {
        std::vector<double> vals;
        for (int b = 0; b < n_batches; ++b) vals.push_back(batch[b][l]);
        const MeanStderr ms = mean_stderr(vals);
        per_class.push_back(json{
            {"stationary_mean", mean[l]},
            {"time_average", ms.mean},
            {"stderr", ms.stderr_},
            {"within_3_stderr", std::abs(ms.mean - mean[l]) <= 3.0 * ms.stderr_}});
    }
    write_json_output(fs::path(o.out_dir) / "moments.json", cfg, opts,
                      json{{"spectral_radius", hawkes.stationarity().spectral_radius},
                           {"is_stationary", hawkes.is_stationary()},
                           {"horizon", T},
                           {"classes", per_class}});
    std::cout << "moments: wrote moments.json to " << o.out_dir << "\n";
    return 0;
}

int cmd_scenario(const RunConfig& cfg, const CommonOpts& o) {
    const MarketParams& market = need_market(cfg);
    const HawkesParams& hawkes = need_hawkes(cfg);
    if (market.n() != 2 || market.m() != 2 || market.k() != 1) {
        throw ConfigError("market", "scenario requires the two-asset layout (n=2, k=1, m=2)");
    }
    const double beta = cfg.utility ? cfg.utility->beta : 0.05;
    MarketSimConfig sim;
    sim.T = o.horizon;
    sim.dt = o.dt;
    const SimPath path =
        simulate_market(market, hawkes, log_optimal_policy(market, beta), sim, o.seed, 0);
    const json opts = options_json(o, "scenario");
    const fs::path f = fs::path(o.out_dir) / "scenario.csv";
    CsvWriter csv(f.string());
    csv.header(
        {"t", "lambda_1", "lambda_2", "omega_bar_1", "omega_bar_2", "S_1", "S_2", "N_1", "N_2"});
    for (std::size_t i = 0; i < path.times.size(); ++i) {
        csv.row({path.times[i], path.lambda[i][0], path.lambda[i][1], path.weights[i][0],
                 path.weights[i][1], path.prices[i][1], path.prices[i][2],
                 double(path.counts[i][0]), double(path.counts[i][1])});
    }
    write_sidecar(f, cfg, opts);
    write_events_csv(fs::path(o.out_dir) / "scenario_events.csv", path.events);
    write_sidecar(fs::path(o.out_dir) / "scenario_events.csv", cfg, opts);
    std::cout << "scenario: " << path.events.events.size() << " jumps over horizon " << o.horizon
              << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hawkes jump-diffusion markets: simulation, optimal policies, value functions"};
    app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
    app.require_subcommand(1);
    app.fallthrough(); // global options may follow the subcommand

    CommonOpts o;
    app.add_option("--config", o.config_path, "JSON config bundling hawkes/market/utility");
    app.add_option("--seed", o.seed, "64-bit seed; fully determines stochastic output");
    app.add_option("--out", o.out_dir, "output directory");
    app.add_option("--paths", o.paths, "Monte Carlo path count");
    app.add_option("--horizon", o.horizon, "time horizon T (years)");
    app.add_option("--dt", o.dt, "time step");
    app.add_option("--grid", o.grid_spec, "grid spec lo:hi:count[;...] or 'auto'");
    app.add_option("--tol", o.tol, "tolerance for iterative solvers");

    std::size_t sim_paths = 1;
    auto* sim = app.add_subcommand("simulate", "simulate market paths under a policy");
    sim->add_option("--n-out", sim_paths, "number of paths to write");

    std::string lambda_arg, policy_grid = "0:5:101";
    auto* pol =
        app.add_subcommand("policy", "optimal weights and consumption at given intensities");
    pol->add_option("--lambda", lambda_arg, "comma-separated intensity vector");
    pol->add_option("--lambda-grid", policy_grid, "lo:hi:count grid for the omega(lambda) table");

    app.add_subcommand("value", "value function: f (log) or g fixed point (power/exponential)");
    app.add_subcommand("charfn", "Riccati characteristic function vs Monte Carlo");

    std::string filter_input;
    int filter_window = 60;
    double filter_threshold = 3.0;
    bool filter_calibrate = false;
    auto* fil = app.add_subcommand("filter", "detect jumps in returns and filter intensities");
    fil->add_option("--input", filter_input, "returns CSV (header; time column first)");
    fil->add_option("--window", filter_window, "rolling-sigma window");
    fil->add_option("--threshold", filter_threshold, "sigma-multiple threshold");
    fil->add_flag("--calibrate", filter_calibrate, "fit Hawkes parameters by MLE");

    app.add_subcommand("moments", "stationary mean and ergodic check");
    app.add_subcommand("scenario", "two-class flight-to-quality scenario");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        RunConfig cfg;
        if (!o.config_path.empty()) cfg = load_config(o.config_path);
        fs::create_directories(o.out_dir);

        if (app.got_subcommand("simulate")) return cmd_simulate(cfg, o, sim_paths);
        if (app.got_subcommand("policy")) return cmd_policy(cfg, o, lambda_arg, policy_grid);
        if (app.got_subcommand("value")) return cmd_value(cfg, o);
        if (app.got_subcommand("charfn")) return cmd_charfn(cfg, o);
        if (app.got_subcommand("filter")) {
            return cmd_filter(cfg, o, filter_input, filter_window, filter_threshold,
                              filter_calibrate);
        }
        if (app.got_subcommand("moments")) return cmd_moments(cfg, o);
        if (app.got_subcommand("scenario")) return cmd_scenario(cfg, o);
        std::cerr << "no subcommand\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
