#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cepshed/monitoring.hpp"
#include "cepshed/planner.hpp"
#include "cepshed/shedding.hpp"

namespace cepshed {

enum class RecomputeReason { None, Overload, Overshed };

const char* reason_name(RecomputeReason r);

/// Pure trigger predicate: OVERLOAD when the measured mean processing time
/// exceeds p* by more than the band, OVERSHED when it sits below the band
/// while shedding is active (the configuration wastes quality).
RecomputeReason needs_recompute(double p_meas_s, double p_star_s, bool shedding_active,
                                double band);

struct ControllerOptions {
    double band = 0.10;              // permitted relative deviation from p*
    double update_threshold = 0.05;  // forwarded for logging only
    double debounce_ms = 1000.0;     // minimum virtual time between recomputes
    PlanObjective objective = PlanObjective::Global;
    bool dump_lp = false;
};

struct ControllerDecision {
    double t_ms = 0.0;
    RecomputeReason reason = RecomputeReason::None;
    double p_meas_s = 0.0;
    double p_star_s = 0.0;
    double solver_wall_ms = 0.0;
    double predicted_output = 0.0;
    std::string status;  // "applied", "fallback", "deferred: <why>"
    std::string lp_text;
};

/// Central shedding controller. Consumes metric updates, maintains the
/// global snapshot (arrival rates are sums of upstream reported outputs,
/// never local counts), and re-plans the bottleneck configuration when a
/// trigger fires.
class Controller {
public:
    Controller(const Topology& topo, std::string bottleneck, ControllerOptions opts);

    /// Feeds one update; returns a new configuration when the controller
    /// decided to re-plan (to be applied atomically by the caller).
    std::optional<ShedderConfig> on_update(const MetricsUpdate& update, double now_ms);

    const Snapshot& snapshot() const { return snap_; }
    double current_p_star() const;
    const ShedderConfig& active_config() const { return active_; }
    /// Caller confirms the configuration took effect (keeps shedding_active
    /// in sync when application is delayed).
    void config_applied(const ShedderConfig& cfg) { active_ = cfg; }

    int recompute_count() const { return recomputes_; }
    int update_count() const { return updates_seen_; }
    const std::vector<ControllerDecision>& decisions() const { return decisions_; }

private:
    void integrate(const MetricsUpdate& update);
    void refresh_arrivals();
    std::optional<ShedderConfig> replan(RecomputeReason reason, double now_ms);

    const Topology& topo_;
    std::string bottleneck_;
    ControllerOptions opts_;
    double bound_s_ = 0.0;  // B* of the bottleneck

    Snapshot snap_;
    ShedderConfig active_;
    int recomputes_ = 0;
    int updates_seen_ = 0;
    double last_plan_t_ms_ = -1e18;
    // State of the last executed plan, used to suppress OVERSHED churn when
    // nothing material changed since planning (the optimum may legitimately
    // sit below the band).
    double plan_p_star_s_ = -1.0;
    double plan_predicted_p_s_ = -1.0;
    std::vector<ControllerDecision> decisions_;
};

} // namespace cepshed
