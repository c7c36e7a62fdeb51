#pragma once

#include <optional>
#include <string>

#include "cepshed/engine.hpp"
#include "cepshed/workload.hpp"

namespace cepshed {

enum class Strategy { None, Local, Global };

Strategy strategy_from_string(const std::string& s);
const char* strategy_name(Strategy s);

struct ExperimentOptions {
    Strategy strategy = Strategy::Global;
    std::string bottleneck;  // empty: the single operator with a latency bound
    double ptime_band = 0.10;
    double update_threshold = 0.05;
    int monitor_window = 1000;
    double controller_delay_ms = 0.0;
    double debounce_ms = 1000.0;
    double channel_delay_ms = 0.0;
    std::optional<std::uint64_t> seed;        // overrides the workload seed
    std::optional<double> duration_ms;        // overrides the workload duration
    bool dump_lp = false;
};

struct ExperimentReport {
    std::string strategy;
    std::string bottleneck;
    SimulationReport run;
    SimulationReport oracle;  // shedding off, unlimited capacity
    double recall = 1.0;
    bool oracle_empty = false;  // recall forced to 1.0, oracle saw nothing
    // Latency compliance at the bottleneck, on the report's time buckets:
    // share of buckets within the band around p* once shedding is active,
    // and the summed |p - p*| deviation (time below p* counts only while
    // shedding is active).
    double in_band_fraction = 0.0;
    double deviation_seconds = 0.0;
    std::vector<ControllerDecision> decisions;

    std::string to_json() const;          // deterministic, no wall-clock content
    std::string controller_log() const;   // JSON lines, includes solver wall time
};

/// Full pipeline: oracle run, shedded run with the chosen strategy, recall
/// and latency metrics. Deterministic for a fixed seed.
ExperimentReport run_experiment(const Topology& topo, const WorkloadSpec& workload,
                                const ExperimentOptions& options);

/// Sum of shedded sink arrivals over the oracle's, 1.0 when the oracle saw
/// nothing (flagged).
double compute_recall(const SimulationReport& shedded, const SimulationReport& oracle,
                      bool* oracle_empty = nullptr);

/// Resolves the bottleneck operator: the explicit id, or the unique
/// operator carrying a latency bound.
std::string resolve_bottleneck(const Topology& topo, const std::string& requested);

} // namespace cepshed
