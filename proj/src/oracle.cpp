#include "cepshed/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cepshed/selectivity.hpp"

namespace cepshed {
namespace oracle {

namespace {

double mu_of(const Topology& topo, const Snapshot& snap, const std::string& op_id) {
    const OperatorSnapshot* os = snap.find(op_id);
    if (os && os->mu > 0) return os->mu;
    const OperatorSpec* op = topo.find_operator(op_id);
    if (op && op->service_rate_hint) return *op->service_rate_hint;
    return std::numeric_limits<double>::infinity();
}

} // namespace

double evaluate(const Instance& inst, const ShedderConfig& config) {
    const Topology& topo = *inst.topo;
    const Snapshot& snap = *inst.snap;

    std::set<std::string> free_ops = transitive_successors(topo, inst.bottleneck);
    free_ops.insert(inst.bottleneck);

    // Pattern output rates: measured for fixed patterns, recomputed for the
    // bottleneck and its successors.
    std::map<std::string, double> y;
    for (const auto& op : topo.operators) {
        if (free_ops.count(op.id)) continue;
        const OperatorSnapshot* os = snap.find(op.id);
        for (const auto& pat : op.patterns) {
            double rate = 0.0;
            if (os) {
                auto it = os->output_rate_by_pattern.find(pat.id);
                if (it != os->output_rate_by_pattern.end()) rate = it->second;
            }
            y[pat.id] = rate;
        }
    }

    for (const auto& op_id : topological_order(topo)) {
        if (!free_ops.count(op_id)) continue;
        const OperatorSpec& op = *topo.find_operator(op_id);
        bool at_bottleneck = op_id == inst.bottleneck;

        std::map<TypeId, double> in;
        if (at_bottleneck) {
            const OperatorSnapshot* os = snap.find(op_id);
            if (os) in = os->lambda_by_type;
        } else {
            for (const auto& e : topo.edges) {
                if (e.to != op_id) continue;
                for (TypeId t : e.types) {
                    if (const SourceSpec* src = topo.find_source(e.from)) {
                        auto sit = snap.source_rates.find(src->id);
                        if (sit != snap.source_rates.end()) {
                            auto rit = sit->second.find(t);
                            if (rit != sit->second.end()) in[t] += rit->second;
                        }
                        continue;
                    }
                    const OperatorSpec* from_op = topo.find_operator(e.from);
                    if (!from_op) continue;
                    for (const auto& pat : from_op->patterns)
                        if (pat.output_type == t) in[t] += y.at(pat.id);
                }
            }
        }

        double mu = mu_of(topo, snap, op_id);
        for (const auto& pat : op.patterns) {
            SelectivityFn fn = build_selectivity(pat);
            double best = 0.0;
            for (const auto& group : fn.groups) {
                double g = std::numeric_limits<double>::infinity();
                for (const auto& [t, k] : group) {
                    auto it = in.find(t);
                    double lam = it == in.end() ? 0.0 : it->second;
                    if (at_bottleneck) lam *= config.ratio(pat.id, t);
                    g = std::min(g, lam / k);
                }
                best = std::max(best, g);
            }
            double out = pat.f * best;
            if (std::isfinite(mu)) out = std::min(out, pat.f * mu);
            y[pat.id] = out;
        }
    }

    if (inst.objective == PlanObjective::Local) {
        double total = 0.0;
        for (const auto& pat : topo.find_operator(inst.bottleneck)->patterns)
            total += y.at(pat.id);
        return total;
    }

    double total = 0.0;
    for (const auto& op : topo.operators)
        for (const auto& pat : op.patterns) {
            double w = 0.0;
            for (const auto& consumer : successors(topo, pat.id))
                if (const SinkSpec* sink = topo.find_sink(consumer)) w += sink->weight;
            if (w > 0) total += w * y.at(pat.id);
        }
    return total;
}

bool feasible(const Instance& inst, const ShedderConfig& config) {
    double p = avg_ptime(*inst.topo, *inst.snap, config, inst.bottleneck);
    return p <= inst.p_star_s + 1e-12;
}

GridResult grid_search(const Instance& inst, double step) {
    if (step <= 0 || step > 1) throw std::invalid_argument("grid step must be in (0,1]");
    const OperatorSpec* op = inst.topo->find_operator(inst.bottleneck);
    if (!op) throw std::invalid_argument("unknown bottleneck operator: " + inst.bottleneck);

    std::vector<std::pair<std::string, TypeId>> dims;
    for (const auto& pat : op->patterns)
        for (TypeId t : pat.input_types()) dims.push_back({pat.id, t});

    int levels = static_cast<int>(std::round(1.0 / step)) + 1;
    std::vector<int> idx(dims.size(), 0);
    GridResult res;

    for (;;) {
        ShedderConfig cfg;
        for (size_t d = 0; d < dims.size(); d++)
            cfg.set(dims[d].first, dims[d].second, std::min(1.0, idx[d] * step));
        res.evaluated++;
        if (feasible(inst, cfg)) {
            double obj = evaluate(inst, cfg);
            if (!res.found || obj > res.objective + 1e-12) {
                res.found = true;
                res.objective = obj;
                res.best = cfg;
            }
        }
        size_t d = 0;
        while (d < idx.size()) {
            if (++idx[d] < levels) break;
            idx[d] = 0;
            d++;
        }
        if (d == idx.size() || idx.empty()) break;
    }
    return res;
}

} // namespace oracle
} // namespace cepshed
