#include "cepshed/experiment.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

namespace cepshed {

Strategy strategy_from_string(const std::string& s) {
    if (s == "none") return Strategy::None;
    if (s == "local") return Strategy::Local;
    if (s == "global") return Strategy::Global;
    throw std::invalid_argument("unknown strategy: " + s + " (use none|local|global)");
}

const char* strategy_name(Strategy s) {
    switch (s) {
    case Strategy::None: return "none";
    case Strategy::Local: return "local";
    case Strategy::Global: return "global";
    }
    return "none";
}

std::string resolve_bottleneck(const Topology& topo, const std::string& requested) {
    if (!requested.empty()) {
        if (!topo.find_operator(requested))
            throw std::invalid_argument("unknown bottleneck operator: " + requested);
        return requested;
    }
    std::string found;
    for (const auto& op : topo.operators) {
        if (!op.latency_bound_ms) continue;
        if (!found.empty())
            throw std::invalid_argument(
                "several operators declare latency bounds; pick one with --bottleneck");
        found = op.id;
    }
    if (found.empty())
        throw std::invalid_argument("no operator declares a latency bound");
    return found;
}

double compute_recall(const SimulationReport& shedded, const SimulationReport& oracle,
                      bool* oracle_empty) {
    double denom = oracle.total_sink_count();
    if (oracle_empty) *oracle_empty = denom <= 0;
    if (denom <= 0) return 1.0;
    return shedded.total_sink_count() / denom;
}

namespace {

void latency_metrics(const SimulationReport& rep, const std::string& bottleneck, double band,
                     double bucket_s, double* in_band_fraction, double* deviation_seconds) {
    double dev = 0.0;
    std::size_t buckets = 0, in_band = 0;
    bool shedding_active = false;
    for (const auto& row : rep.series) {
        if (row.op != bottleneck) continue;
        if (rep.first_config_t_ms >= 0 && row.t_ms > rep.first_config_t_ms)
            shedding_active = true;
        if (row.dequeued == 0) continue;
        double p_star_us = row.p_star_us;
        if (p_star_us <= 0) continue;
        double p = row.avg_ptime_us;
        if (p > p_star_us) {
            dev += (p - p_star_us) * 1e-6;
        } else if (shedding_active) {
            dev += (p_star_us - p) * 1e-6;
        }
        if (shedding_active) {
            buckets++;
            if (p >= p_star_us * (1.0 - band) && p <= p_star_us * (1.0 + band)) in_band++;
        }
    }
    (void)bucket_s;
    *deviation_seconds = dev;
    *in_band_fraction = buckets ? static_cast<double>(in_band) / buckets : 0.0;
}

} // namespace

ExperimentReport run_experiment(const Topology& topo, const WorkloadSpec& workload,
                                const ExperimentOptions& options) {
    WorkloadSpec wl = workload;
    if (options.seed) wl.seed = *options.seed;
    if (options.duration_ms) wl.duration_ms = *options.duration_ms;

    ExperimentReport out;
    out.strategy = strategy_name(options.strategy);
    out.bottleneck = resolve_bottleneck(topo, options.bottleneck);

    SimOptions base;
    base.seed = wl.seed;
    base.horizon_ms = wl.duration_ms;
    base.channel_delay_ms = options.channel_delay_ms;
    base.monitor_window_events = options.monitor_window;
    base.update_threshold = options.update_threshold;
    base.controller_delay_ms = options.controller_delay_ms;

    // Oracle: no shedding, unlimited capacity.
    {
        SimOptions oracle_opts = base;
        oracle_opts.zero_service = true;
        Simulation sim(topo, wl, oracle_opts);
        out.oracle = sim.run();
    }

    // Measured run.
    {
        SimOptions run_opts = base;
        if (options.strategy == Strategy::None) {
            Simulation sim(topo, wl, run_opts);
            out.run = sim.run();
        } else {
            ControllerOptions copts;
            copts.band = options.ptime_band;
            copts.update_threshold = options.update_threshold;
            copts.debounce_ms = options.debounce_ms;
            copts.objective = options.strategy == Strategy::Global ? PlanObjective::Global
                                                                   : PlanObjective::Local;
            copts.dump_lp = options.dump_lp;
            Controller ctrl(topo, out.bottleneck, copts);
            Simulation sim(topo, wl, run_opts);
            sim.set_controller(&ctrl, out.bottleneck);
            out.run = sim.run();
            out.decisions = ctrl.decisions();
        }
    }

    out.recall = compute_recall(out.run, out.oracle, &out.oracle_empty);
    latency_metrics(out.run, out.bottleneck, options.ptime_band, base.bucket_ms * 1e-3,
                    &out.in_band_fraction, &out.deviation_seconds);
    return out;
}

std::string ExperimentReport::to_json() const {
    nlohmann::ordered_json j;
    j["strategy"] = strategy;
    j["bottleneck"] = bottleneck;
    j["recall"] = recall;
    if (oracle_empty) j["oracle_empty"] = true;
    j["in_band_fraction"] = in_band_fraction;
    j["deviation_seconds"] = deviation_seconds;
    j["run"] = nlohmann::ordered_json::parse(run.to_json());
    j["oracle"] = nlohmann::ordered_json::parse(oracle.to_json());
    return j.dump(2);
}

std::string ExperimentReport::controller_log() const {
    std::ostringstream out;
    for (const auto& d : decisions) {
        nlohmann::ordered_json j;
        j["t"] = d.t_ms;
        j["reason"] = reason_name(d.reason);
        j["bottleneck"] = bottleneck;
        j["p_meas"] = d.p_meas_s;
        j["p_star"] = d.p_star_s;
        j["solver_ms"] = d.solver_wall_ms;
        j["predicted_output"] = d.predicted_output;
        j["status"] = d.status;
        out << j.dump() << "\n";
    }
    return out.str();
}

} // namespace cepshed
