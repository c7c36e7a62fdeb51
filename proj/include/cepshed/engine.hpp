#pragma once

#include <cstdint>
#include <deque>
#include <list>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include "cepshed/controller.hpp"
#include "cepshed/core_model.hpp"
#include "cepshed/monitoring.hpp"
#include "cepshed/selectivity.hpp"
#include "cepshed/shedding.hpp"
#include "cepshed/workload.hpp"

namespace cepshed {

enum class ServiceMode { Deterministic, Exponential };

struct SimOptions {
    double horizon_ms = 60000.0;
    std::uint64_t seed = 1;
    double channel_delay_ms = 0.0;
    ServiceMode service_mode = ServiceMode::Deterministic;
    bool zero_service = false;  // oracle runs: unlimited capacity, no queueing
    double bucket_ms = 1000.0;
    int monitor_window_events = 1000;
    int rate_window_buckets = 2;
    double update_threshold = 0.05;
    double controller_delay_ms = 0.0;
    bool collect_match_log = false;
    bool collect_sojourn = false;
    std::map<std::string, ShedderConfig> initial_configs;  // operator id -> config
};

/// A completed pattern match: the contributing events and their time span.
struct Match {
    std::string pattern_id;
    std::vector<Event> contributing;
    double min_ts_ms = 0.0;
    double max_ts_ms = 0.0;

    std::vector<std::uint64_t> event_ids() const {
        std::vector<std::uint64_t> out;
        for (const auto& e : contributing) out.push_back(e.id);
        return out;
    }
};

// ---------------------------------------------------------------------------
// Pattern state machines
// ---------------------------------------------------------------------------

/// State-machine matcher for one pattern. Machines are kept oldest-first;
/// an arriving event advances the oldest machine that accepts it, otherwise
/// it may open a fresh machine. Events are consumed at most once per
/// pattern; machines whose window can no longer close are discarded.
class PatternMatcher {
public:
    explicit PatternMatcher(const PatternSpec& spec);

    /// Offers one event. Completed matches are appended to `out`.
    /// Returns true when the event was consumed by a machine.
    bool offer(const Event& e, std::vector<Match>& out);

    std::size_t open_machines() const { return machines_.size(); }

private:
    struct Node {
        PatternAst::Kind kind;
        TypeId type = -1;
        std::vector<int> children;
    };
    struct Machine {
        std::vector<std::uint8_t> sat;  // per node
        std::vector<Event> contributing;
        double min_ts_ms = 0.0;
        double max_ts_ms = 0.0;
    };

    int flatten(const PatternAst& ast);
    bool try_accept(Machine& m, int node, const Event& e);

    const PatternSpec* spec_;
    std::vector<Node> nodes_;  // index 0 is the root
    std::list<Machine> machines_;
};

// ---------------------------------------------------------------------------
// Operator runtime
// ---------------------------------------------------------------------------

struct OperatorCounters {
    std::map<TypeId, std::uint64_t> arrivals_by_type;
    std::uint64_t dequeued = 0;
    std::uint64_t rejected = 0;
    double busy_us = 0.0;
    std::map<std::string, std::uint64_t> emissions_by_pattern;
};

class OperatorRuntime {
public:
    OperatorRuntime(const Topology& topo, const OperatorSpec& spec);

    /// Enqueue; returns false (and counts a rejection) for types the
    /// operator does not consume.
    bool ingest(const Event& e, double now_ms);

    struct Step {
        double service_us = 0.0;
        std::uint32_t processed_mask = 0;  // bit per pattern, set = processed
    };
    /// Shedding decisions and service time for the head event. One Bernoulli
    /// draw per applicable (pattern, type) pair regardless of the ratio, so
    /// different configs replay identical random streams.
    Step plan_step(std::mt19937_64& shed_rng, std::mt19937_64& service_rng, ServiceMode mode,
                   bool zero_service) const;

    struct Emitted {
        Event event;
        std::string pattern_id;
    };
    /// Dequeues the head event, advances the machines of every processed
    /// pattern, and builds complex events for completed matches (f copies).
    std::vector<Emitted> complete_step(const Step& step, double now_ms, std::uint64_t& next_id,
                                       std::vector<Match>* match_log);

    /// Synchronous step for direct use: plan + complete, advancing the
    /// runtime clock by the service time.
    std::vector<Emitted> process_next(std::mt19937_64& shed_rng, std::mt19937_64& service_rng,
                                      ServiceMode mode, std::uint64_t& next_id);

    bool queue_empty() const { return queue_.empty(); }
    std::size_t queue_len() const { return queue_.size(); }
    double head_enqueue_ms() const { return queue_.front().second; }
    const OperatorSpec& spec() const { return *spec_; }
    const OperatorCounters& counters() const { return counters_; }
    double clock_ms() const { return clock_ms_; }
    std::size_t open_machines(std::size_t pattern_idx) const;

    void set_config(ShedderConfig cfg) { config_ = std::move(cfg); }
    const ShedderConfig& config() const { return config_; }

    bool busy = false;

private:
    const Topology* topo_;
    const OperatorSpec* spec_;
    std::set<TypeId> input_types_;
    std::vector<std::set<TypeId>> pattern_inputs_;
    std::vector<PatternMatcher> matchers_;
    std::deque<std::pair<Event, double>> queue_;  // event + enqueue time
    ShedderConfig config_;
    OperatorCounters counters_;
    double clock_ms_ = 0.0;
};

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

struct BucketRow {
    double t_ms = 0.0;  // bucket end
    std::string op;
    std::uint64_t dequeued = 0;
    double avg_ptime_us = 0.0;  // mean service per dequeued event in the bucket
    std::size_t queue_len = 0;
    std::map<TypeId, double> lambda;  // arrivals/s per type in the bucket
    double p_star_us = -1.0;          // controller's current budget, bottleneck only
};

struct ConfigChange {
    double t_ms = 0.0;
    std::string reason;
    std::string config_json;
    double predicted_output = 0.0;
};

struct SojournStats {
    double sum_ms = 0.0;
    std::uint64_t count = 0;
    std::vector<double> samples_ms;  // only with collect_sojourn
};

struct SimulationReport {
    double horizon_ms = 0.0;
    std::uint64_t seed = 0;
    std::map<std::string, std::uint64_t> sink_counts;
    std::map<std::string, std::map<TypeId, std::uint64_t>> sink_counts_by_type;
    std::map<std::string, OperatorCounters> operators;
    std::map<std::string, std::size_t> final_queue_lengths;
    std::vector<BucketRow> series;
    std::vector<ConfigChange> config_history;
    double first_config_t_ms = -1.0;
    std::uint64_t update_messages = 0;
    std::uint64_t recomputes = 0;
    RatePrediction predictions;  // rate-model view for comparison
    std::map<std::string, SojournStats> sojourn;
    std::vector<Match> match_log;

    std::string to_json() const;
    std::string series_csv() const;
    double total_sink_count() const;
};

class Simulation {
public:
    Simulation(const Topology& topo, const WorkloadSpec& workload, SimOptions options);

    /// Attach the runtime controller (owned by the caller).
    void set_controller(Controller* controller, const std::string& bottleneck);

    SimulationReport run();

private:
    struct CalendarEvent;
    class Impl;
    const Topology& topo_;
    WorkloadSpec workload_;
    SimOptions options_;
    Controller* controller_ = nullptr;
    std::string bottleneck_;
};

/// One-call wrapper: fixed shedder configs, no controller.
SimulationReport run_simulation(const Topology& topo, const WorkloadSpec& workload,
                                const std::map<std::string, ShedderConfig>& configs,
                                double horizon_ms, std::uint64_t seed,
                                SimOptions options = {});

} // namespace cepshed
