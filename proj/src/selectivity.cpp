#include "cepshed/selectivity.hpp"

#include <algorithm>
#include <limits>

namespace cepshed {

namespace {

using Group = SelectivityFn::Group;

// Normalize an AST into disjunctive groups: MIN within a group, MAX across.
// Seq/And merge child groups (counts add; Or children distribute), Or
// concatenates child groups.
std::vector<Group> normalize(const PatternAst& n) {
    switch (n.kind) {
    case PatternAst::Kind::Atom: {
        if (n.predicate)
            throw std::invalid_argument(
                "property atom not expanded to a virtual type before selectivity");
        Group g;
        g[n.atom_type] = 1;
        return {g};
    }
    case PatternAst::Kind::Seq:
    case PatternAst::Kind::And: {
        if (n.children.size() < 2) throw std::invalid_argument("Seq/And needs >=2 children");
        std::vector<Group> acc = {Group{}};
        for (const auto& c : n.children) {
            std::vector<Group> child = normalize(c);
            std::vector<Group> next;
            for (const auto& a : acc)
                for (const auto& b : child) {
                    Group merged = a;
                    for (const auto& [t, k] : b) merged[t] += k;
                    next.push_back(std::move(merged));
                }
            acc = std::move(next);
        }
        return acc;
    }
    case PatternAst::Kind::Or: {
        if (n.children.size() < 2) throw std::invalid_argument("Or needs >=2 children");
        std::vector<Group> acc;
        for (const auto& c : n.children) {
            std::vector<Group> child = normalize(c);
            acc.insert(acc.end(), child.begin(), child.end());
        }
        // Deduplicate identical branches, e.g. (or (atom 0) (atom 0)).
        std::sort(acc.begin(), acc.end());
        acc.erase(std::unique(acc.begin(), acc.end()), acc.end());
        return acc;
    }
    }
    throw std::invalid_argument("unsupported pattern node");
}

double group_rate(const Group& g, const std::map<TypeId, double>& rates) {
    double out = std::numeric_limits<double>::infinity();
    for (const auto& [t, k] : g) {
        auto it = rates.find(t);
        double lam = it == rates.end() ? 0.0 : it->second;
        out = std::min(out, lam / k);
    }
    return out;
}

} // namespace

SelectivityFn build_selectivity(const PatternSpec& pattern) {
    SelectivityFn fn;
    fn.pattern_id = pattern.id;
    fn.f = pattern.f;
    fn.groups = normalize(pattern.ast);
    if (fn.groups.empty()) throw std::invalid_argument("pattern reduces to no selectivity group");
    return fn;
}

double predict_output(const SelectivityFn& fn, const std::map<TypeId, double>& input_rates) {
    for (const auto& [t, lam] : input_rates)
        if (lam < 0) throw std::invalid_argument("negative input rate for type " + std::to_string(t));
    double best = 0.0;
    for (const auto& g : fn.groups) best = std::max(best, group_rate(g, input_rates));
    return fn.f * best;
}

RatePrediction predict_sinks(const Topology& topo,
                             const std::map<std::string, std::map<TypeId, double>>& source_rates,
                             const ShedderConfig& config) {
    RatePrediction out;

    // Rate of each type as seen on the input of each consumer node.
    // Keyed by consumer id; sum over incoming edges of producer-side rates.
    std::map<std::string, std::map<TypeId, double>> input_rates;

    // Per-producer per-type emitted rates, filled in topological order.
    std::map<std::string, std::map<TypeId, double>> emitted;
    for (const auto& s : topo.sources) {
        auto it = source_rates.find(s.id);
        std::map<TypeId, double> r = it != source_rates.end() ? it->second : s.default_rates;
        emitted[s.id] = std::move(r);
    }

    auto deliver_from = [&](const std::string& producer) {
        for (const auto& e : topo.edges) {
            if (e.from != producer) continue;
            for (TypeId t : e.types) {
                auto it = emitted[producer].find(t);
                if (it == emitted[producer].end()) continue;
                input_rates[e.to][t] += it->second;
            }
        }
    };
    for (const auto& s : topo.sources) deliver_from(s.id);

    for (const auto& op_id : topological_order(topo)) {
        const OperatorSpec& op = *topo.find_operator(op_id);
        const auto& in = input_rates[op_id];

        // Unconstrained per-pattern outputs under shedding.
        std::vector<double> unconstrained(op.patterns.size(), 0.0);
        double total_in = 0.0;
        for (const auto& [t, lam] : in) total_in += lam;
        for (size_t i = 0; i < op.patterns.size(); i++) {
            const PatternSpec& pat = op.patterns[i];
            SelectivityFn fn = build_selectivity(pat);
            std::map<TypeId, double> shed_rates;
            for (const auto& [t, lam] : in)
                shed_rates[t] = config.ratio(pat.id, t) * lam;
            unconstrained[i] = predict_output(fn, shed_rates);
        }

        // Processing-rate cap (emission can never outrun processing). The
        // cap is applied at operator granularity: when the summed match rate
        // exceeds mu, every pattern is scaled down proportionally.
        double p_s = 0.0;  // mean processing time per arriving event, seconds
        for (const auto& [t, lam] : in) {
            if (total_in <= 0) break;
            double per_event_us = 0.0;
            for (const auto& pat : op.patterns)
                if (pat.input_types().count(t))
                    per_event_us += config.ratio(pat.id, t) * pat.ptime_us;
            p_s += (lam / total_in) * per_event_us * 1e-6;
        }
        double mu = op.service_rate_hint ? *op.service_rate_hint
                       : (p_s > 0 ? 1.0 / p_s : std::numeric_limits<double>::infinity());
        double match_rate = 0.0;
        for (size_t i = 0; i < op.patterns.size(); i++)
            match_rate += unconstrained[i] / op.patterns[i].f;
        double scale = (match_rate > mu && match_rate > 0) ? mu / match_rate : 1.0;

        for (size_t i = 0; i < op.patterns.size(); i++) {
            const PatternSpec& pat = op.patterns[i];
            double y = unconstrained[i] * scale;
            out.pattern_rates[pat.id] = y;
            emitted[op_id][pat.output_type] += y;
        }
        deliver_from(op_id);
    }

    for (const auto& s : topo.sinks) {
        double total = 0.0;
        for (const auto& [t, lam] : input_rates[s.id]) total += lam;
        out.sink_rates[s.id] = total;
    }
    for (const auto& op : topo.operators) out.operator_inputs[op.id] = input_rates[op.id];
    return out;
}

Snapshot model_snapshot(const Topology& topo,
                        const std::map<std::string, std::map<TypeId, double>>& source_rates) {
    ShedderConfig none;
    RatePrediction pred = predict_sinks(topo, source_rates, none);

    Snapshot snap;
    snap.source_rates = source_rates;
    for (const auto& s : topo.sources)
        if (!snap.source_rates.count(s.id)) snap.source_rates[s.id] = s.default_rates;

    for (const auto& op : topo.operators) {
        OperatorSnapshot os;
        os.lambda_by_type = pred.operator_inputs[op.id];
        for (const auto& [t, lam] : os.lambda_by_type) os.lambda_total += lam;
        for (const auto& pat : op.patterns) {
            os.ptime_by_pattern_us[pat.id] = pat.ptime_us;
            os.output_rate_by_pattern[pat.id] = pred.pattern_rates[pat.id];
        }
        snap.operators[op.id] = os;
        // Mean per-event cost of processing everything, for mu.
        double p = avg_ptime(topo, snap, none, op.id);
        OperatorSnapshot& ref = snap.operators[op.id];
        ref.mu = p > 0 ? 1.0 / p : 0.0;
        ref.rho = ref.mu > 0 ? ref.lambda_total / ref.mu : 0.0;
    }
    return snap;
}

} // namespace cepshed
