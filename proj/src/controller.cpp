#include "cepshed/controller.hpp"

#include <chrono>
#include <cmath>

namespace cepshed {

const char* reason_name(RecomputeReason r) {
    switch (r) {
    case RecomputeReason::None: return "none";
    case RecomputeReason::Overload: return "OVERLOAD";
    case RecomputeReason::Overshed: return "OVERSHED";
    }
    return "none";
}

RecomputeReason needs_recompute(double p_meas_s, double p_star_s, bool shedding_active,
                                double band) {
    if (p_star_s <= 0) return RecomputeReason::None;
    if (p_meas_s > p_star_s * (1.0 + band)) return RecomputeReason::Overload;
    if (p_meas_s < p_star_s * (1.0 - band) && shedding_active) return RecomputeReason::Overshed;
    return RecomputeReason::None;
}

Controller::Controller(const Topology& topo, std::string bottleneck, ControllerOptions opts)
    : topo_(topo), bottleneck_(std::move(bottleneck)), opts_(opts) {
    const OperatorSpec* op = topo_.find_operator(bottleneck_);
    if (!op) throw std::invalid_argument("unknown bottleneck operator: " + bottleneck_);
    if (!op->latency_bound_ms)
        throw std::invalid_argument("bottleneck " + bottleneck_ + " declares no latency bound");
    bound_s_ = *op->latency_bound_ms * 1e-3;
}

void Controller::integrate(const MetricsUpdate& u) {
    if (u.is_source) {
        snap_.source_rates[u.node_id] = u.output_rates;
    } else {
        OperatorSnapshot& os = snap_.operators[u.node_id];
        if (u.avg_ptime_us >= 0) {
            os.mu = u.avg_ptime_us > 0 ? 1e6 / u.avg_ptime_us : 0.0;
        }
        for (const auto& [pat, pt] : u.ptime_by_pattern_us) os.ptime_by_pattern_us[pat] = pt;
        for (const auto& [pat, r] : u.output_rate_by_pattern) os.output_rate_by_pattern[pat] = r;
    }
    snap_.t_ms = u.t_ms;
    refresh_arrivals();
}

void Controller::refresh_arrivals() {
    // Arrival rates are derived from upstream reported outputs; an
    // overloaded operator cannot count more events than it processes, so
    // only the upstream view sees the real offered load.
    for (const auto& op : topo_.operators) {
        OperatorSnapshot& os = snap_.operators[op.id];
        os.lambda_by_type.clear();
        for (TypeId t : op.input_types()) os.lambda_by_type[t] = 0.0;
        for (const auto& e : topo_.edges) {
            if (e.to != op.id) continue;
            for (TypeId t : e.types) {
                if (const SourceSpec* src = topo_.find_source(e.from)) {
                    auto sit = snap_.source_rates.find(src->id);
                    if (sit == snap_.source_rates.end()) continue;
                    auto rit = sit->second.find(t);
                    if (rit != sit->second.end()) os.lambda_by_type[t] += rit->second;
                    continue;
                }
                const OperatorSpec* from_op = topo_.find_operator(e.from);
                if (!from_op) continue;
                auto uit = snap_.operators.find(from_op->id);
                if (uit == snap_.operators.end()) continue;
                for (const auto& pat : from_op->patterns) {
                    if (pat.output_type != t) continue;
                    auto oit = uit->second.output_rate_by_pattern.find(pat.id);
                    if (oit != uit->second.output_rate_by_pattern.end())
                        os.lambda_by_type[t] += oit->second;
                }
            }
        }
        os.lambda_total = 0.0;
        for (const auto& [t, lam] : os.lambda_by_type) os.lambda_total += lam;
        os.rho = os.mu > 0 ? os.lambda_total / os.mu : 0.0;
    }
}

double Controller::current_p_star() const {
    auto it = snap_.operators.find(bottleneck_);
    double lambda = it == snap_.operators.end() ? 0.0 : it->second.lambda_total;
    return feasible_ptime(bound_s_, lambda);
}

std::optional<ShedderConfig> Controller::on_update(const MetricsUpdate& update, double now_ms) {
    updates_seen_++;
    integrate(update);

    auto it = snap_.operators.find(bottleneck_);
    if (it == snap_.operators.end() || it->second.mu <= 0) return std::nullopt;

    double p_meas = 1.0 / it->second.mu;
    double p_star = current_p_star();
    RecomputeReason reason =
        needs_recompute(p_meas, p_star, active_.sheds_anything(), opts_.band);
    if (reason == RecomputeReason::None) return std::nullopt;

    if (now_ms - last_plan_t_ms_ < opts_.debounce_ms) return std::nullopt;

    if (reason == RecomputeReason::Overshed && plan_p_star_s_ > 0) {
        // Re-planning can only relax shedding if the budget grew or the
        // measured time drifted away from what the active plan predicted.
        bool budget_grew = p_star > plan_p_star_s_ * (1.0 + opts_.band);
        bool plan_stale = plan_predicted_p_s_ > 0 &&
                          p_meas < plan_predicted_p_s_ * (1.0 - opts_.band);
        if (!budget_grew && !plan_stale) return std::nullopt;
    }

    return replan(reason, now_ms);
}

std::optional<ShedderConfig> Controller::replan(RecomputeReason reason, double now_ms) {
    ControllerDecision d;
    d.t_ms = now_ms;
    d.reason = reason;
    d.p_star_s = current_p_star();
    auto it = snap_.operators.find(bottleneck_);
    d.p_meas_s = (it != snap_.operators.end() && it->second.mu > 0) ? 1.0 / it->second.mu : 0.0;

    auto t0 = std::chrono::steady_clock::now();
    ShedderConfig next;
    try {
        PlanResult plan_res =
            plan(topo_, snap_, bottleneck_, d.p_star_s, opts_.objective, opts_.dump_lp);
        if (plan_res.status == lp::Status::Optimal) {
            next = plan_res.config;
            d.predicted_output = plan_res.predicted_output;
            d.status = "applied";
            d.lp_text = plan_res.lp_text;
        } else {
            next = uniform_fallback(topo_, snap_, bottleneck_, d.p_star_s);
            d.status = std::string("fallback: LP ") + lp::status_name(plan_res.status);
        }
    } catch (const std::exception& e) {
        d.status = std::string("deferred: ") + e.what();
        d.solver_wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
        decisions_.push_back(std::move(d));
        return std::nullopt;
    }
    d.solver_wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    recomputes_++;
    last_plan_t_ms_ = now_ms;
    plan_p_star_s_ = d.p_star_s;
    ShedderConfig candidate = next;
    plan_predicted_p_s_ = avg_ptime(topo_, snap_, candidate, bottleneck_);
    decisions_.push_back(std::move(d));
    return candidate;
}

} // namespace cepshed
