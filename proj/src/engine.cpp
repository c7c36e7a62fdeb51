#include "cepshed/engine.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cepshed/trace.hpp"

namespace cepshed {

// ===========================================================================
// PatternMatcher
// ===========================================================================

PatternMatcher::PatternMatcher(const PatternSpec& spec) : spec_(&spec) {
    flatten(spec.ast);
}

int PatternMatcher::flatten(const PatternAst& ast) {
    int idx = static_cast<int>(nodes_.size());
    nodes_.push_back({ast.kind, ast.atom_type, {}});
    for (const auto& c : ast.children) {
        int child = flatten(c);
        nodes_[idx].children.push_back(child);
    }
    return idx;
}

bool PatternMatcher::try_accept(Machine& m, int node, const Event& e) {
    const Node& n = nodes_[node];
    if (m.sat[node]) return false;
    switch (n.kind) {
    case PatternAst::Kind::Atom:
        if (n.type != e.type) return false;
        m.sat[node] = 1;
        m.contributing.push_back(e);
        return true;
    case PatternAst::Kind::Seq: {
        // Strict order: only the first unsatisfied child may accept.
        for (int c : n.children) {
            if (m.sat[c]) continue;
            if (!try_accept(m, c, e)) return false;
            bool all = true;
            for (int cc : n.children) all = all && m.sat[cc];
            m.sat[node] = all ? 1 : 0;
            return true;
        }
        return false;
    }
    case PatternAst::Kind::And: {
        for (int c : n.children) {
            if (m.sat[c]) continue;
            if (try_accept(m, c, e)) {
                bool all = true;
                for (int cc : n.children) all = all && m.sat[cc];
                m.sat[node] = all ? 1 : 0;
                return true;
            }
        }
        return false;
    }
    case PatternAst::Kind::Or: {
        for (int c : n.children) {
            if (try_accept(m, c, e)) {
                bool any = false;
                for (int cc : n.children) any = any || m.sat[cc];
                m.sat[node] = any ? 1 : 0;
                return true;
            }
        }
        return false;
    }
    }
    return false;
}

bool PatternMatcher::offer(const Event& e, std::vector<Match>& out) {
    double window = spec_->window_ms;

    // Oldest machine first. Machines whose window already closed are pruned
    // on the way; event timestamps offered to a matcher never decrease.
    for (auto it = machines_.begin(); it != machines_.end();) {
        if (e.ts_ms - it->min_ts_ms > window) {
            it = machines_.erase(it);
            continue;
        }
        double span = std::max(it->max_ts_ms, e.ts_ms) - std::min(it->min_ts_ms, e.ts_ms);
        if (span <= window && try_accept(*it, 0, e)) {
            it->min_ts_ms = std::min(it->min_ts_ms, e.ts_ms);
            it->max_ts_ms = std::max(it->max_ts_ms, e.ts_ms);
            if (it->sat[0]) {
                Match match;
                match.pattern_id = spec_->id;
                match.contributing = std::move(it->contributing);
                match.min_ts_ms = it->min_ts_ms;
                match.max_ts_ms = it->max_ts_ms;
                out.push_back(std::move(match));
                machines_.erase(it);
            }
            return true;
        }
        ++it;
    }

    // No open machine took it; try opening a fresh one.
    Machine fresh;
    fresh.sat.assign(nodes_.size(), 0);
    if (!try_accept(fresh, 0, e)) return false;
    fresh.min_ts_ms = fresh.max_ts_ms = e.ts_ms;
    if (fresh.sat[0]) {
        // Single-event completion (an Or branch can finish immediately).
        Match match;
        match.pattern_id = spec_->id;
        match.contributing = std::move(fresh.contributing);
        match.min_ts_ms = match.max_ts_ms = e.ts_ms;
        out.push_back(std::move(match));
        return true;
    }
    machines_.push_back(std::move(fresh));
    return true;
}

// ===========================================================================
// OperatorRuntime
// ===========================================================================

OperatorRuntime::OperatorRuntime(const Topology& topo, const OperatorSpec& spec)
    : topo_(&topo), spec_(&spec), input_types_(spec.input_types()) {
    assert(spec.patterns.size() <= 32);
    for (const auto& p : spec.patterns) {
        pattern_inputs_.push_back(p.input_types());
        matchers_.emplace_back(p);
    }
}

bool OperatorRuntime::ingest(const Event& e, double now_ms) {
    if (!input_types_.count(e.type)) {
        counters_.rejected++;
        return false;
    }
    counters_.arrivals_by_type[e.type]++;
    queue_.push_back({e, now_ms});
    return true;
}

OperatorRuntime::Step OperatorRuntime::plan_step(std::mt19937_64& shed_rng,
                                                 std::mt19937_64& service_rng, ServiceMode mode,
                                                 bool zero_service) const {
    Step step;
    const Event& e = queue_.front().first;
    for (std::size_t i = 0; i < spec_->patterns.size(); i++) {
        if (!pattern_inputs_[i].count(e.type)) continue;  // type unused: free skip
        if (should_process(config_, spec_->patterns[i].id, e.type, shed_rng)) {
            step.processed_mask |= 1u << i;
            step.service_us += spec_->patterns[i].ptime_us;
        }
    }
    if (zero_service) {
        step.service_us = 0.0;
    } else if (mode == ServiceMode::Exponential && step.service_us > 0) {
        step.service_us = std::exponential_distribution<double>(1.0 / step.service_us)(service_rng);
    }
    return step;
}

std::vector<OperatorRuntime::Emitted> OperatorRuntime::complete_step(
    const Step& step, double now_ms, std::uint64_t& next_id, std::vector<Match>* match_log) {
    Event e = std::move(queue_.front().first);
    queue_.pop_front();
    counters_.dequeued++;
    counters_.busy_us += step.service_us;

    std::vector<Emitted> out;
    std::vector<Match> matches;
    for (std::size_t i = 0; i < spec_->patterns.size(); i++) {
        if (!(step.processed_mask & (1u << i))) continue;
        matches.clear();
        matchers_[i].offer(e, matches);
        const PatternSpec& pat = spec_->patterns[i];
        for (auto& m : matches) {
            counters_.emissions_by_pattern[pat.id] += pat.f;

            // Complex event: union of contributing attributes (first key
            // wins) plus the producing pattern as source tag.
            Event ce;
            ce.type = pat.output_type;
            ce.ts_ms = now_ms;
            for (const auto& contrib : m.contributing)
                for (const auto& [k, v] : contrib.attrs)
                    if (!find_attr(ce.attrs, k)) ce.attrs.push_back({k, v});
            std::erase_if(ce.attrs, [](const auto& kv) { return kv.first == "source"; });
            ce.attrs.push_back({"source", pat.id});

            for (int k = 0; k < pat.f; k++) {
                Event copy = ce;
                copy.id = next_id++;
                out.push_back({std::move(copy), pat.id});
            }
            if (match_log) match_log->push_back(std::move(m));
        }
    }
    return out;
}

std::vector<OperatorRuntime::Emitted> OperatorRuntime::process_next(std::mt19937_64& shed_rng,
                                                                    std::mt19937_64& service_rng,
                                                                    ServiceMode mode,
                                                                    std::uint64_t& next_id) {
    if (queue_.empty()) return {};
    Step step = plan_step(shed_rng, service_rng, mode, false);
    clock_ms_ += step.service_us * 1e-3;
    return complete_step(step, clock_ms_, next_id, nullptr);
}

std::size_t OperatorRuntime::open_machines(std::size_t pattern_idx) const {
    return matchers_[pattern_idx].open_machines();
}

// ===========================================================================
// Simulation
// ===========================================================================

namespace {

constexpr int kSourceEmit = 0;
constexpr int kTraceEmit = 1;
constexpr int kDelivery = 2;
constexpr int kCompletion = 3;
constexpr int kConfigApply = 4;
constexpr int kRateStep = 5;
constexpr int kBucketTick = 6;

struct Cal {
    double t = 0.0;
    std::uint64_t seq = 0;
    int kind = 0;
    int a = -1;  // stream/op/consumer/step index
    Event ev;
    ShedderConfig cfg;
    std::string note;
    double pred = 0.0;
};

struct CalCmp {
    bool operator()(const Cal& x, const Cal& y) const {
        if (x.t != y.t) return x.t > y.t;
        return x.seq > y.seq;
    }
};

struct SourceStream {
    int source_idx = -1;
    TypeId type = -1;
    double rate = 0.0;  // events/s
    bool scheduled = false;
    std::mt19937_64 rng;
};

struct OperatorMonitorState {
    RunningAverage avg_ptime_us;
    std::map<std::string, RunningAverage> pattern_ptime_us;
    std::map<std::string, RunningAverage> pattern_out_rate;
    std::map<TypeId, RunningAverage> arrival_rate;
    std::map<std::string, std::uint64_t> bucket_emissions;
    std::map<TypeId, std::uint64_t> bucket_arrivals;
    double bucket_busy_us = 0.0;
    std::uint64_t bucket_dequeued = 0;
    std::map<std::string, double> reported;  // metric key -> last reported value
};

struct SourceMonitorState {
    std::map<TypeId, std::uint64_t> bucket_counts;
    std::map<TypeId, RunningAverage> rate;
    std::map<std::string, double> reported;
};

std::optional<double> reported_value(const std::map<std::string, double>& reported,
                                     const std::string& key) {
    auto it = reported.find(key);
    if (it == reported.end()) return std::nullopt;
    return it->second;
}

} // namespace

class Simulation::Impl {
public:
    Impl(const Topology& topo, const WorkloadSpec& wl, SimOptions opt, Controller* ctrl,
         const std::string& bottleneck)
        : topo_(topo), wl_(wl), opt_(opt), ctrl_(ctrl), bottleneck_(bottleneck) {
        if (opt_.horizon_ms <= 0) opt_.horizon_ms = wl_.duration_ms;
        if (opt_.seed == 0) opt_.seed = wl_.seed;
        build();
    }

    SimulationReport run();

private:
    void build();
    void schedule(Cal c) {
        c.seq = seq_++;
        calendar_.push(std::move(c));
    }
    void route_event(bool from_source, int producer_idx, Event ev, double t);
    void start_service(int op, double t);
    void close_bucket(double t);
    void dispatch_update(const MetricsUpdate& u, double t);
    double next_gap_ms(SourceStream& s);

    const Topology& topo_;
    WorkloadSpec wl_;
    SimOptions opt_;
    Controller* ctrl_;
    std::string bottleneck_;
    int bottleneck_idx_ = -1;

    std::vector<OperatorRuntime> ops_;
    std::map<std::string, int> op_idx_;
    std::vector<const SinkSpec*> sinks_;
    std::map<std::string, int> sink_idx_;
    // consumer code: [0, n_ops) operators, then sinks
    std::vector<std::map<TypeId, std::vector<int>>> source_routes_, op_routes_;
    std::vector<SourceStream> streams_;

    TraceEvents trace_;
    std::vector<std::size_t> trace_cursor_;

    std::vector<std::mt19937_64> shed_rng_, svc_rng_;
    std::vector<OperatorRuntime::Step> pending_;
    std::vector<OperatorMonitorState> op_mon_;
    std::vector<SourceMonitorState> src_mon_;

    std::priority_queue<Cal, std::vector<Cal>, CalCmp> calendar_;
    std::uint64_t seq_ = 0;
    std::uint64_t next_event_id_ = 1;

    SimulationReport report_;
};

void Simulation::Impl::build() {
    int n_ops = static_cast<int>(topo_.operators.size());
    for (int i = 0; i < n_ops; i++) {
        ops_.emplace_back(topo_, topo_.operators[i]);
        op_idx_[topo_.operators[i].id] = i;
        shed_rng_.push_back(seeded_rng(opt_.seed, "shed/" + topo_.operators[i].id));
        svc_rng_.push_back(seeded_rng(opt_.seed, "svc/" + topo_.operators[i].id));
    }
    pending_.resize(n_ops);
    op_mon_.resize(n_ops);
    for (int i = 0; i < n_ops; i++)
        op_mon_[i].avg_ptime_us = RunningAverage(opt_.monitor_window_events);

    for (const auto& s : topo_.sinks) {
        sink_idx_[s.id] = static_cast<int>(sinks_.size());
        sinks_.push_back(&s);
    }

    std::map<std::string, int> source_idx;
    for (std::size_t i = 0; i < topo_.sources.size(); i++)
        source_idx[topo_.sources[i].id] = static_cast<int>(i);
    source_routes_.resize(topo_.sources.size());
    op_routes_.resize(n_ops);
    src_mon_.resize(topo_.sources.size());

    auto register_route = [&](std::map<TypeId, std::vector<int>>& table, TypeId t, int code) {
        table[t].push_back(code);
        // An edge that carries a base type also transports its virtual
        // refinements.
        for (const auto& r : topo_.virtual_types)
            if (r.base_type == t) table[r.virtual_type].push_back(code);
    };
    for (const auto& e : topo_.edges) {
        int code = -1;
        if (auto it = op_idx_.find(e.to); it != op_idx_.end()) code = it->second;
        else if (auto st = sink_idx_.find(e.to); st != sink_idx_.end()) code = n_ops + st->second;
        else continue;
        if (auto sit = source_idx.find(e.from); sit != source_idx.end()) {
            for (TypeId t : e.types) register_route(source_routes_[sit->second], t, code);
        } else if (auto oit = op_idx_.find(e.from); oit != op_idx_.end()) {
            for (TypeId t : e.types) register_route(op_routes_[oit->second], t, code);
        }
    }

    for (const auto& [op_id, cfg] : opt_.initial_configs) {
        auto it = op_idx_.find(op_id);
        if (it == op_idx_.end()) throw std::invalid_argument("config for unknown operator " + op_id);
        ops_[it->second].set_config(cfg);
        report_.config_history.push_back({0.0, "initial", cfg.to_json(), 0.0});
        if (cfg.sheds_anything() && report_.first_config_t_ms < 0) report_.first_config_t_ms = 0.0;
    }

    if (!bottleneck_.empty()) {
        auto it = op_idx_.find(bottleneck_);
        if (it == op_idx_.end()) throw std::invalid_argument("unknown bottleneck " + bottleneck_);
        bottleneck_idx_ = it->second;
    } else {
        // The p* column is still tracked for the (single) bounded operator
        // so uncontrolled runs expose their latency deviation.
        for (int i = 0; i < n_ops; i++)
            if (topo_.operators[i].latency_bound_ms) {
                bottleneck_idx_ = bottleneck_idx_ < 0 ? i : bottleneck_idx_;
            }
    }

    auto schedule_simple = [this](double t, int kind, int a) {
        Cal c;
        c.t = t;
        c.kind = kind;
        c.a = a;
        schedule(std::move(c));
    };

    if (wl_.is_trace()) {
        trace_ = ingest_trace(wl_.trace_paths, topo_.sources.size(), wl_.trace_time_scale);
        trace_cursor_.assign(topo_.sources.size(), 0);
        for (std::size_t s = 0; s < topo_.sources.size(); s++)
            if (!trace_.per_source[s].empty())
                schedule_simple(trace_.per_source[s][0].ts_ms, kTraceEmit, static_cast<int>(s));
    } else {
        for (std::size_t s = 0; s < topo_.sources.size(); s++) {
            const SourceSpec& src = topo_.sources[s];
            std::map<TypeId, double> rates = src.default_rates;
            auto wit = wl_.source_rates.find(src.id);
            if (wit != wl_.source_rates.end()) rates = wit->second;
            for (TypeId t : src.emits) {
                SourceStream stream;
                stream.source_idx = static_cast<int>(s);
                stream.type = t;
                auto rit = rates.find(t);
                stream.rate = rit == rates.end() ? 0.0 : rit->second;
                stream.rng =
                    seeded_rng(opt_.seed, "arr/" + src.id + "/" + std::to_string(t));
                streams_.push_back(std::move(stream));
            }
        }
        for (std::size_t i = 0; i < streams_.size(); i++) {
            if (streams_[i].rate <= 0) continue;
            streams_[i].scheduled = true;
            schedule_simple(next_gap_ms(streams_[i]), kSourceEmit, static_cast<int>(i));
        }
    }

    for (std::size_t i = 0; i < wl_.steps.size(); i++)
        schedule_simple(wl_.steps[i].t_ms, kRateStep, static_cast<int>(i));

    schedule_simple(opt_.bucket_ms, kBucketTick, 0);
}

double Simulation::Impl::next_gap_ms(SourceStream& s) {
    if (wl_.arrival == ArrivalProcess::Constant) return 1000.0 / s.rate;
    return std::exponential_distribution<double>(s.rate)(s.rng) * 1000.0;
}

void Simulation::Impl::route_event(bool from_source, int producer_idx, Event ev, double t) {
    const auto& table = from_source ? source_routes_[producer_idx] : op_routes_[producer_idx];
    auto it = table.find(ev.type);
    if (it == table.end()) return;  // unconsumed output type
    for (int code : it->second) {
        Cal c;
        c.t = t + opt_.channel_delay_ms;
        c.kind = kDelivery;
        c.a = code;
        c.ev = ev;
        schedule(std::move(c));
    }
}

void Simulation::Impl::start_service(int op, double t) {
    OperatorRuntime& rt = ops_[op];
    pending_[op] = rt.plan_step(shed_rng_[op], svc_rng_[op], opt_.service_mode, opt_.zero_service);
    rt.busy = true;
    Cal c;
    c.t = t + pending_[op].service_us * 1e-3;
    c.kind = kCompletion;
    c.a = op;
    schedule(std::move(c));
}

void Simulation::Impl::dispatch_update(const MetricsUpdate& u, double t) {
    report_.update_messages++;
    if (!ctrl_) return;
    auto cfg = ctrl_->on_update(u, t);
    if (!cfg) return;
    const ControllerDecision& d = ctrl_->decisions().back();
    Cal c;
    c.t = t + opt_.controller_delay_ms;
    c.kind = kConfigApply;
    c.a = bottleneck_idx_;
    c.cfg = *cfg;
    c.note = reason_name(d.reason);
    c.pred = d.predicted_output;
    schedule(std::move(c));
}

void Simulation::Impl::close_bucket(double t) {
    double bucket_s = opt_.bucket_ms * 1e-3;

    // Sources first so the controller sees fresh upstream rates before any
    // operator update can trigger a recompute.
    for (std::size_t s = 0; s < topo_.sources.size(); s++) {
        SourceMonitorState& mon = src_mon_[s];
        const SourceSpec& src = topo_.sources[s];
        std::set<TypeId> keys(src.emits.begin(), src.emits.end());
        for (const auto& [ty, n] : mon.bucket_counts) keys.insert(ty);
        bool any_dev = false;
        MetricsUpdate u;
        u.node_id = src.id;
        u.is_source = true;
        u.t_ms = t;
        for (TypeId ty : keys) {
            auto& avg = mon.rate.try_emplace(ty, RunningAverage(opt_.rate_window_buckets))
                            .first->second;
            std::uint64_t n = mon.bucket_counts.count(ty) ? mon.bucket_counts[ty] : 0;
            avg.add(n / bucket_s);
            double val = avg.value();
            u.output_rates[ty] = val;
            if (should_emit(val, reported_value(mon.reported, std::to_string(ty)),
                            opt_.update_threshold))
                any_dev = true;
        }
        mon.bucket_counts.clear();
        if (any_dev) {
            for (const auto& [ty, v] : u.output_rates) mon.reported[std::to_string(ty)] = v;
            dispatch_update(u, t);
        }
    }

    for (const auto& op_id : topological_order(topo_)) {
        int i = op_idx_.at(op_id);
        OperatorMonitorState& mon = op_mon_[i];
        OperatorRuntime& rt = ops_[i];

        BucketRow row;
        row.t_ms = t;
        row.op = op_id;
        row.dequeued = mon.bucket_dequeued;
        row.avg_ptime_us =
            mon.bucket_dequeued ? mon.bucket_busy_us / mon.bucket_dequeued : 0.0;
        row.queue_len = rt.queue_len();
        for (TypeId ty : rt.spec().input_types()) {
            std::uint64_t n = mon.bucket_arrivals.count(ty) ? mon.bucket_arrivals[ty] : 0;
            row.lambda[ty] = n / bucket_s;
        }
        if (i == bottleneck_idx_) {
            if (ctrl_) {
                row.p_star_us = ctrl_->current_p_star() * 1e6;
            } else if (rt.spec().latency_bound_ms) {
                double lambda = 0.0;
                for (const auto& [ty, v] : row.lambda) lambda += v;
                row.p_star_us = feasible_ptime(*rt.spec().latency_bound_ms * 1e-3, lambda) * 1e6;
            }
        }
        report_.series.push_back(row);

        MetricsUpdate u;
        u.node_id = op_id;
        u.t_ms = t;
        bool any_dev = false;
        if (mon.avg_ptime_us.count() > 0) {
            u.avg_ptime_us = mon.avg_ptime_us.value();
            if (should_emit(u.avg_ptime_us, reported_value(mon.reported, "p"),
                            opt_.update_threshold))
                any_dev = true;
        }
        for (const auto& [pat, avg] : mon.pattern_ptime_us) {
            u.ptime_by_pattern_us[pat] = avg.value();
            if (should_emit(avg.value(), reported_value(mon.reported, "pt/" + pat),
                            opt_.update_threshold))
                any_dev = true;
        }
        for (const auto& pat : rt.spec().patterns) {
            auto& avg = mon.pattern_out_rate.try_emplace(pat.id, RunningAverage(opt_.rate_window_buckets))
                            .first->second;
            std::uint64_t n = mon.bucket_emissions.count(pat.id) ? mon.bucket_emissions[pat.id] : 0;
            avg.add(n / bucket_s);
            u.output_rate_by_pattern[pat.id] = avg.value();
            u.output_rates[pat.output_type] += avg.value();
            if (should_emit(avg.value(), reported_value(mon.reported, "out/" + pat.id),
                            opt_.update_threshold))
                any_dev = true;
        }
        for (const auto& [ty, lam] : row.lambda) {
            auto& avg = mon.arrival_rate.try_emplace(ty, RunningAverage(opt_.rate_window_buckets))
                            .first->second;
            avg.add(lam);
            u.arrival_rates[ty] = avg.value();
        }

        mon.bucket_arrivals.clear();
        mon.bucket_emissions.clear();
        mon.bucket_busy_us = 0;
        mon.bucket_dequeued = 0;

        // Nothing to report before the operator processed anything.
        if (u.avg_ptime_us < 0 && rt.counters().dequeued == 0) continue;
        if (any_dev) {
            if (u.avg_ptime_us >= 0) mon.reported["p"] = u.avg_ptime_us;
            for (const auto& [pat, v] : u.ptime_by_pattern_us) mon.reported["pt/" + pat] = v;
            for (const auto& [pat, v] : u.output_rate_by_pattern) mon.reported["out/" + pat] = v;
            dispatch_update(u, t);
        }
    }
}

SimulationReport Simulation::Impl::run() {
    report_.horizon_ms = opt_.horizon_ms;
    report_.seed = opt_.seed;
    double horizon = opt_.horizon_ms;

    while (!calendar_.empty()) {
        Cal c = calendar_.top();
        if (c.t > horizon + 1e-9) break;
        calendar_.pop();
        double t = c.t;

        switch (c.kind) {
        case kSourceEmit: {
            SourceStream& s = streams_[c.a];
            s.scheduled = false;
            Event ev;
            ev.type = s.type;
            ev.ts_ms = t;
            ev.id = next_event_id_++;
            ev.type = topo_.classify(ev);
            src_mon_[s.source_idx].bucket_counts[ev.type]++;
            route_event(true, s.source_idx, std::move(ev), t);
            if (s.rate > 0) {
                s.scheduled = true;
                Cal nxt;
                nxt.t = t + next_gap_ms(s);
                nxt.kind = kSourceEmit;
                nxt.a = c.a;
                schedule(std::move(nxt));
            }
            break;
        }
        case kTraceEmit: {
            std::size_t cur = trace_cursor_[c.a]++;
            Event ev = trace_.per_source[c.a][cur];
            ev.id = next_event_id_++;
            ev.type = topo_.classify(ev);
            src_mon_[c.a].bucket_counts[ev.type]++;
            route_event(true, c.a, std::move(ev), t);
            if (trace_cursor_[c.a] < trace_.per_source[c.a].size()) {
                Cal nxt;
                nxt.t = trace_.per_source[c.a][trace_cursor_[c.a]].ts_ms;
                nxt.kind = kTraceEmit;
                nxt.a = c.a;
                schedule(std::move(nxt));
            }
            break;
        }
        case kDelivery: {
            int n_ops = static_cast<int>(ops_.size());
            if (c.a >= n_ops) {
                const SinkSpec& sink = *sinks_[c.a - n_ops];
                report_.sink_counts[sink.id]++;
                report_.sink_counts_by_type[sink.id][c.ev.type]++;
                break;
            }
            OperatorRuntime& rt = ops_[c.a];
            TypeId ty = c.ev.type;
            if (rt.ingest(c.ev, t)) {
                op_mon_[c.a].bucket_arrivals[ty]++;
                if (!rt.busy) start_service(c.a, t);
            }
            break;
        }
        case kCompletion: {
            OperatorRuntime& rt = ops_[c.a];
            OperatorMonitorState& mon = op_mon_[c.a];
            const OperatorRuntime::Step& step = pending_[c.a];

            double sojourn_ms = t - rt.head_enqueue_ms();
            auto& st = report_.sojourn[rt.spec().id];
            st.sum_ms += sojourn_ms;
            st.count++;
            if (opt_.collect_sojourn) st.samples_ms.push_back(sojourn_ms);

            mon.bucket_busy_us += step.service_us;
            mon.bucket_dequeued++;
            mon.avg_ptime_us.add(step.service_us);
            for (std::size_t p = 0; p < rt.spec().patterns.size(); p++) {
                if (!(step.processed_mask & (1u << p))) continue;
                const PatternSpec& pat = rt.spec().patterns[p];
                mon.pattern_ptime_us.try_emplace(pat.id, RunningAverage(opt_.monitor_window_events))
                    .first->second.add(pat.ptime_us);
            }

            auto emissions = rt.complete_step(step, t, next_event_id_,
                                              opt_.collect_match_log ? &report_.match_log
                                                                     : nullptr);
            for (auto& em : emissions) {
                mon.bucket_emissions[em.pattern_id]++;
                em.event.type = topo_.classify(em.event);
                route_event(false, c.a, std::move(em.event), t);
            }
            if (!rt.queue_empty())
                start_service(c.a, t);
            else
                rt.busy = false;
            break;
        }
        case kConfigApply: {
            ops_[c.a].set_config(c.cfg);
            if (ctrl_) ctrl_->config_applied(c.cfg);
            report_.config_history.push_back({t, c.note, c.cfg.to_json(), c.pred});
            if (report_.first_config_t_ms < 0) report_.first_config_t_ms = t;
            break;
        }
        case kRateStep: {
            const RateStep& rs = wl_.steps[c.a];
            for (std::size_t i = 0; i < streams_.size(); i++) {
                SourceStream& s = streams_[i];
                if (!rs.source.empty() && topo_.sources[s.source_idx].id != rs.source) continue;
                s.rate *= rs.scale;
                if (!s.scheduled && s.rate > 0) {
                    s.scheduled = true;
                    Cal nxt;
                    nxt.t = t + next_gap_ms(s);
                    nxt.kind = kSourceEmit;
                    nxt.a = static_cast<int>(i);
                    schedule(std::move(nxt));
                }
            }
            break;
        }
        case kBucketTick: {
            close_bucket(t);
            if (t + opt_.bucket_ms <= horizon + 1e-9) {
                Cal nxt;
                nxt.t = t + opt_.bucket_ms;
                nxt.kind = kBucketTick;
                schedule(std::move(nxt));
            }
            break;
        }
        }
    }

    for (std::size_t i = 0; i < ops_.size(); i++) {
        report_.operators[ops_[i].spec().id] = ops_[i].counters();
        report_.final_queue_lengths[ops_[i].spec().id] = ops_[i].queue_len();
    }
    for (const auto& s : topo_.sinks) {
        report_.sink_counts.try_emplace(s.id, 0);
    }
    if (ctrl_) report_.recomputes = ctrl_->recompute_count();

    // Rate-model prediction with the final configuration, for comparison.
    ShedderConfig merged;
    for (const auto& rt : ops_)
        for (const auto& [key, r] : rt.config().entries()) merged.set(key.first, key.second, r);
    std::map<std::string, std::map<TypeId, double>> rates;
    if (wl_.is_trace()) {
        for (std::size_t s = 0; s < topo_.sources.size(); s++) {
            std::map<TypeId, std::uint64_t> counts;
            for (const auto& e : trace_.per_source[s]) counts[e.type]++;
            double span_s = opt_.horizon_ms * 1e-3;
            for (const auto& [ty, n] : counts) rates[topo_.sources[s].id][ty] = n / span_s;
        }
    } else {
        for (const auto& s : streams_)
            rates[topo_.sources[s.source_idx].id][s.type] = s.rate;
    }
    report_.predictions = predict_sinks(topo_, rates, merged);

    return report_;
}

Simulation::Simulation(const Topology& topo, const WorkloadSpec& workload, SimOptions options)
    : topo_(topo), workload_(workload), options_(options) {}

void Simulation::set_controller(Controller* controller, const std::string& bottleneck) {
    controller_ = controller;
    bottleneck_ = bottleneck;
}

SimulationReport Simulation::run() {
    Impl impl(topo_, workload_, options_, controller_, bottleneck_);
    return impl.run();
}

SimulationReport run_simulation(const Topology& topo, const WorkloadSpec& workload,
                                const std::map<std::string, ShedderConfig>& configs,
                                double horizon_ms, std::uint64_t seed, SimOptions options) {
    options.horizon_ms = horizon_ms;
    options.seed = seed;
    options.initial_configs = configs;
    Simulation sim(topo, workload, options);
    return sim.run();
}

// ===========================================================================
// Report serialization
// ===========================================================================

double SimulationReport::total_sink_count() const {
    double total = 0;
    for (const auto& [s, n] : sink_counts) total += static_cast<double>(n);
    return total;
}

std::string SimulationReport::to_json() const {
    nlohmann::ordered_json j;
    j["horizon_ms"] = horizon_ms;
    j["seed"] = seed;

    nlohmann::ordered_json sinks;
    for (const auto& [id, n] : sink_counts) {
        nlohmann::ordered_json s;
        s["total"] = n;
        nlohmann::ordered_json by_type;
        auto it = sink_counts_by_type.find(id);
        if (it != sink_counts_by_type.end())
            for (const auto& [ty, c] : it->second) by_type[std::to_string(ty)] = c;
        s["by_type"] = by_type;
        sinks[id] = s;
    }
    j["sinks"] = sinks;

    nlohmann::ordered_json ops;
    for (const auto& [id, c] : operators) {
        nlohmann::ordered_json o;
        nlohmann::ordered_json arr;
        for (const auto& [ty, n] : c.arrivals_by_type) arr[std::to_string(ty)] = n;
        o["arrivals_by_type"] = arr;
        o["dequeued"] = c.dequeued;
        o["rejected"] = c.rejected;
        o["busy_us"] = c.busy_us;
        nlohmann::ordered_json em;
        for (const auto& [pat, n] : c.emissions_by_pattern) em[pat] = n;
        o["emissions_by_pattern"] = em;
        auto qit = final_queue_lengths.find(id);
        o["final_queue"] = qit == final_queue_lengths.end() ? 0 : qit->second;
        auto sit = sojourn.find(id);
        if (sit != sojourn.end() && sit->second.count > 0)
            o["sojourn_mean_ms"] = sit->second.sum_ms / sit->second.count;
        ops[id] = o;
    }
    j["operators"] = ops;

    nlohmann::ordered_json ctrl;
    ctrl["update_messages"] = update_messages;
    ctrl["recomputes"] = recomputes;
    ctrl["first_config_t_ms"] = first_config_t_ms;
    nlohmann::ordered_json hist = nlohmann::ordered_json::array();
    for (const auto& h : config_history) {
        nlohmann::ordered_json e;
        e["t_ms"] = h.t_ms;
        e["reason"] = h.reason;
        e["predicted_output"] = h.predicted_output;
        e["config"] = nlohmann::ordered_json::parse(h.config_json);
        hist.push_back(e);
    }
    ctrl["history"] = hist;
    j["controller"] = ctrl;

    nlohmann::ordered_json pred;
    nlohmann::ordered_json ps;
    for (const auto& [id, v] : predictions.sink_rates) ps[id] = v;
    pred["sink_rates"] = ps;
    nlohmann::ordered_json pp;
    for (const auto& [id, v] : predictions.pattern_rates) pp[id] = v;
    pred["pattern_rates"] = pp;
    j["predictions"] = pred;

    nlohmann::ordered_json series = nlohmann::ordered_json::array();
    for (const auto& r : this->series) {
        nlohmann::ordered_json row;
        row["t_ms"] = r.t_ms;
        row["op"] = r.op;
        row["dequeued"] = r.dequeued;
        row["avg_ptime_us"] = r.avg_ptime_us;
        row["queue_len"] = r.queue_len;
        if (r.p_star_us >= 0) row["p_star_us"] = r.p_star_us;
        nlohmann::ordered_json lam;
        for (const auto& [ty, v] : r.lambda) lam[std::to_string(ty)] = v;
        row["lambda"] = lam;
        series.push_back(row);
    }
    j["series"] = series;
    return j.dump(2);
}

std::string SimulationReport::series_csv() const {
    std::set<TypeId> all_types;
    for (const auto& r : series)
        for (const auto& [ty, v] : r.lambda) all_types.insert(ty);

    std::ostringstream out;
    out << "t_ms,operator,dequeued,avg_ptime_us,queue_len,p_star_us";
    for (TypeId ty : all_types) out << ",lambda_" << ty;
    out << "\n";
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.6g", v);
        return std::string(buf);
    };
    for (const auto& r : series) {
        out << num(r.t_ms) << "," << r.op << "," << r.dequeued << "," << num(r.avg_ptime_us) << ","
            << r.queue_len << ",";
        if (r.p_star_us >= 0) out << num(r.p_star_us);
        for (TypeId ty : all_types) {
            out << ",";
            auto it = r.lambda.find(ty);
            if (it != r.lambda.end()) out << num(it->second);
        }
        out << "\n";
    }
    return out.str();
}

} // namespace cepshed
