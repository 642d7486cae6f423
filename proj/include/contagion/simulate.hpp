#pragma once

#include "contagion/hawkes.hpp"
#include "contagion/jump_law.hpp"
#include "contagion/market.hpp"
#include "contagion/parallel.hpp"
#include "contagion/rng.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

namespace contagion {

struct SimEvent {
    double t = 0.0;
    int cls = 0;
    double z = 0.0;
    // Portfolio jump exposure (omega'J)_cls applied at this event; filled by
    // the market simulator from the left-limit weights, NaN otherwise.
    double pre_exposure = std::numeric_limits<double>::quiet_NaN();
};

struct EventLog {
    std::vector<SimEvent> events;
};

struct HawkesPath {
    EventLog log;
    IntensityState final_state;
};

// Exact event-driven simulation of (N, lambda) by thinning. Between events
// each intensity moves monotonically toward lambda_inf, so on a window the
// total intensity is dominated by sum_l max(lambda_l, lambda_inf_l); the
// bound is refreshed every min_l(1/alpha_l) and after each accepted event.
// Marks, thinning draws and class selection use disjoint substreams of
// (seed, path), so changing the mark laws never perturbs the event skeleton.
HawkesPath simulate_hawkes(const HawkesParams& params, const std::vector<JumpLaw>& laws, double T,
                           std::uint64_t seed, std::uint64_t path_index = 0);

// Closed-form compensator int_0^T lambda_l ds given the event log.
std::vector<double> compensator(const HawkesParams& params, const EventLog& log, double T);

// Right-continuous intensity replay.
std::vector<std::vector<double>> intensity_on_grid(const HawkesParams& params, const EventLog& log,
                                                   const std::vector<double>& times);

// Sequential replay cursor over one event log (exact decay + excite).
class IntensityWalker {
public:
    IntensityWalker(const HawkesParams& params, const EventLog& log);
    // Advance to time t >= current time, applying events in (current, t].
    void advance_to(double t);
    const IntensityState& state() const { return state_; }
    // Left limit at the next event time, or the decayed value at t if no
    // event intervenes.
    std::vector<double> lambda_left_at(double t) const;

private:
    const HawkesParams* params_;
    const EventLog* log_;
    IntensityState state_;
    std::size_t next_event_ = 0;
};

// ---- market simulation ----

struct PolicyDecision {
    std::vector<double> weights;  // length n
    double consumption = 0.0;     // rate, currency per unit time
};

using PolicyFn =
    std::function<PolicyDecision(double t, const std::vector<double>& lambda, double wealth)>;

enum class PathStatus { ok, ruin, solvency_violation };

// One simulated trajectory on the union of the uniform grid and the exact
// jump times. Rows are post-jump (cadlag) states; the weights column holds
// the decision in force from that time onward, while each jump applies the
// left-limit decision.
struct SimPath {
    std::vector<double> times;
    std::vector<std::vector<double>> lambda;
    std::vector<std::vector<std::int64_t>> counts;
    std::vector<std::vector<double>> prices; // S_0 first, then the n risky assets
    std::vector<double> wealth;
    std::vector<std::vector<double>> weights;
    std::vector<double> consumption;
    EventLog events;
    PathStatus status = PathStatus::ok;
    double stop_time = 0.0; // time of ruin / violation when status != ok
    double final_wealth = 0.0;
    std::vector<double> final_lambda;
    std::vector<std::int64_t> final_counts;
};

struct MarketSimConfig {
    double x0 = 1.0;
    double T = 1.0;
    double dt = 1.0 / 252.0;
    bool log_space = false; // exact-GBM stepping between jumps instead of Euler
    bool record_path = true;
};

SimPath simulate_market(const MarketParams& market, const HawkesParams& hawkes,
                        const PolicyFn& policy, const MarketSimConfig& cfg, std::uint64_t seed,
                        std::uint64_t path_index = 0);

// Ready-made policies.
PolicyFn riskless_only_policy(int n);
PolicyFn constant_weights_policy(std::vector<double> weights, double consumption_fraction);
PolicyFn log_optimal_policy(const MarketParams& market, double beta);

} // namespace contagion
