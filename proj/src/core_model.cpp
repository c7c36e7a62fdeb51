#include "cepshed/core_model.hpp"

#include <algorithm>
#include <functional>
#include <queue>
#include <sstream>

namespace cepshed {

void PatternAst::collect_atom_types(std::vector<TypeId>& out) const {
    if (kind == Kind::Atom) {
        out.push_back(atom_type);
        return;
    }
    for (const auto& c : children) c.collect_atom_types(out);
}

std::set<TypeId> PatternSpec::input_types() const {
    std::vector<TypeId> all;
    ast.collect_atom_types(all);
    return {all.begin(), all.end()};
}

std::set<TypeId> OperatorSpec::input_types() const {
    std::set<TypeId> out;
    for (const auto& p : patterns) {
        auto t = p.input_types();
        out.insert(t.begin(), t.end());
    }
    return out;
}

std::set<TypeId> OperatorSpec::output_types() const {
    std::set<TypeId> out;
    for (const auto& p : patterns) out.insert(p.output_type);
    return out;
}

const OperatorSpec* Topology::find_operator(const std::string& id) const {
    for (const auto& o : operators)
        if (o.id == id) return &o;
    return nullptr;
}

const SourceSpec* Topology::find_source(const std::string& id) const {
    for (const auto& s : sources)
        if (s.id == id) return &s;
    return nullptr;
}

const SinkSpec* Topology::find_sink(const std::string& id) const {
    for (const auto& s : sinks)
        if (s.id == id) return &s;
    return nullptr;
}

const PatternSpec* Topology::find_pattern(const std::string& id) const {
    for (const auto& o : operators)
        for (const auto& p : o.patterns)
            if (p.id == id) return &p;
    return nullptr;
}

const std::string* Topology::operator_of_pattern(const std::string& pattern_id) const {
    for (const auto& o : operators)
        for (const auto& p : o.patterns)
            if (p.id == pattern_id) return &o.id;
    return nullptr;
}

bool Topology::has_type(TypeId t) const {
    for (const auto& ty : types)
        if (ty.id == t) return true;
    return false;
}

std::vector<std::string> Topology::producers_of_type(TypeId t) const {
    // A virtual type is produced by whoever produces its base type.
    TypeId base = t;
    for (const auto& r : virtual_types)
        if (r.virtual_type == t) base = r.base_type;

    std::vector<std::string> out;
    for (const auto& s : sources)
        if (std::find(s.emits.begin(), s.emits.end(), base) != s.emits.end())
            out.push_back(s.id);
    for (const auto& o : operators)
        for (const auto& p : o.patterns)
            if (p.output_type == base) out.push_back(p.id);
    return out;
}

TypeId Topology::classify(const Event& e) const {
    for (const auto& rule : virtual_types) {
        if (rule.base_type != e.type) continue;
        const AttrValue* v = find_attr(e.attrs, rule.attr_key);
        if (v && *v == rule.attr_value) return rule.virtual_type;
    }
    return e.type;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace {

void check_ast(const PatternAst& ast, const Topology& topo, const std::string& pid,
               std::vector<Violation>& out) {
    switch (ast.kind) {
    case PatternAst::Kind::Atom:
        if (!topo.has_type(ast.atom_type))
            out.push_back({"unknown-type",
                           "pattern " + pid + " references undeclared type " +
                               std::to_string(ast.atom_type)});
        if (!ast.children.empty())
            out.push_back({"atom-with-children", "pattern " + pid});
        break;
    case PatternAst::Kind::Seq:
    case PatternAst::Kind::And:
    case PatternAst::Kind::Or:
        if (ast.children.size() < 2)
            out.push_back({"node-arity",
                           "pattern " + pid + " has a Seq/And/Or node with fewer than 2 children"});
        for (const auto& c : ast.children) check_ast(c, topo, pid, out);
        break;
    }
}

} // namespace

std::vector<Violation> validate(const Topology& topo) {
    std::vector<Violation> out;

    std::set<TypeId> type_ids;
    for (const auto& t : topo.types) {
        if (!type_ids.insert(t.id).second)
            out.push_back({"dup-type-id", "type id " + std::to_string(t.id) + " declared twice"});
    }

    // Every type must be produced by a source or a pattern.
    for (const auto& t : topo.types) {
        if (topo.producers_of_type(t.id).empty())
            out.push_back({"type-unproduced",
                           "type " + std::to_string(t.id) + " (" + t.name +
                               ") has no source or pattern producing it"});
    }

    std::set<std::string> node_ids;
    for (const auto& s : topo.sources) {
        node_ids.insert(s.id);
        for (TypeId t : s.emits)
            if (!type_ids.count(t))
                out.push_back({"unknown-type",
                               "source " + s.id + " emits undeclared type " + std::to_string(t)});
    }

    std::set<std::string> pattern_ids;
    for (const auto& o : topo.operators) {
        node_ids.insert(o.id);
        if (o.patterns.empty())
            out.push_back({"empty-patterns", "operator " + o.id + " implements no pattern"});
        for (const auto& p : o.patterns) {
            if (!pattern_ids.insert(p.id).second)
                out.push_back({"dup-pattern-id", "pattern id " + p.id + " used twice"});
            if (p.window_ms <= 0)
                out.push_back({"bad-window", "pattern " + p.id});
            if (p.f < 1)
                out.push_back({"bad-f", "pattern " + p.id});
            if (p.ptime_us <= 0)
                out.push_back({"bad-ptime", "pattern " + p.id});
            if (!type_ids.count(p.output_type))
                out.push_back({"unknown-type", "pattern " + p.id + " outputs undeclared type " +
                                                   std::to_string(p.output_type)});
            if (p.input_types().count(p.output_type))
                out.push_back({"self-loop-type",
                               "pattern " + p.id + " consumes its own output type"});
            check_ast(p.ast, topo, p.id, out);
        }
    }

    for (const auto& s : topo.sinks) {
        node_ids.insert(s.id);
        if (s.weight <= 0)
            out.push_back({"nonpositive-sink-weight", "sink " + s.id});
    }

    // Edges: endpoints must exist; carried types must be producible by the
    // producer and consumable by the consumer.
    std::vector<const VirtualTypeRule*> virtualized;
    for (const auto& r : topo.virtual_types) virtualized.push_back(&r);
    std::map<std::string, int> sink_in_degree;
    for (const auto& e : topo.edges) {
        const SourceSpec* src = topo.find_source(e.from);
        const OperatorSpec* from_op = topo.find_operator(e.from);
        if (!src && !from_op) {
            out.push_back({"dangling-edge", "edge from unknown node " + e.from});
            continue;
        }
        const OperatorSpec* to_op = topo.find_operator(e.to);
        const SinkSpec* to_sink = topo.find_sink(e.to);
        if (!to_op && !to_sink) {
            out.push_back({"dangling-edge", "edge to unknown node " + e.to});
            continue;
        }
        if (to_sink) sink_in_degree[e.to]++;
        for (TypeId t : e.types) {
            bool producible = false;
            if (src)
                producible = std::find(src->emits.begin(), src->emits.end(), t) != src->emits.end();
            if (from_op) producible = from_op->output_types().count(t) > 0;
            // A virtual refinement travels wherever its base type does.
            if (!producible) {
                for (const auto& r : topo.virtual_types)
                    if (r.virtual_type == t) {
                        if (src)
                            producible = std::find(src->emits.begin(), src->emits.end(),
                                                   r.base_type) != src->emits.end();
                        if (from_op) producible = from_op->output_types().count(r.base_type) > 0;
                    }
            }
            if (!producible)
                out.push_back({"edge-type-not-producible",
                               "edge " + e.from + "->" + e.to + " carries type " +
                                   std::to_string(t) + " the producer cannot emit"});
            if (to_op) {
                auto inputs = to_op->input_types();
                bool consumable = inputs.count(t) > 0;
                // A base type is consumable when the consumer matches one of
                // its virtual refinements.
                if (!consumable)
                    for (const auto& r : virtualized)
                        if (r->base_type == t && inputs.count(r->virtual_type)) consumable = true;
                if (!consumable)
                    out.push_back({"edge-type-not-consumable",
                                   "edge " + e.from + "->" + e.to + " carries type " +
                                       std::to_string(t) + " the consumer does not use"});
            }
        }
    }

    for (const auto& s : topo.sinks)
        if (sink_in_degree[s.id] == 0)
            out.push_back({"sink-no-input", "sink " + s.id + " has no incoming edge"});

    if (topological_order(topo).empty() && !topo.operators.empty())
        out.push_back({"cycle", "operator graph contains a cycle"});

    return out;
}

// ---------------------------------------------------------------------------
// Graph queries
// ---------------------------------------------------------------------------

std::set<std::string> successors(const Topology& topo, const std::string& pattern_id) {
    const PatternSpec* p = topo.find_pattern(pattern_id);
    if (!p) throw std::invalid_argument("unknown pattern id: " + pattern_id);
    const std::string& owner = *topo.operator_of_pattern(pattern_id);

    std::set<std::string> out;
    for (const auto& e : topo.edges) {
        if (e.from != owner) continue;
        if (std::find(e.types.begin(), e.types.end(), p->output_type) == e.types.end()) continue;
        if (topo.find_operator(e.to) || topo.find_sink(e.to)) out.insert(e.to);
    }
    return out;
}

std::set<std::string> transitive_successors(const Topology& topo, const std::string& op_id) {
    if (!topo.find_operator(op_id)) throw std::invalid_argument("unknown operator id: " + op_id);

    std::set<std::string> seen;
    std::queue<std::string> frontier;
    frontier.push(op_id);
    while (!frontier.empty()) {
        std::string cur = frontier.front();
        frontier.pop();
        for (const auto& e : topo.edges) {
            if (e.from != cur) continue;
            if (!topo.find_operator(e.to)) continue;
            if (seen.insert(e.to).second) frontier.push(e.to);
        }
    }
    seen.erase(op_id);
    return seen;
}

std::vector<std::string> topological_order(const Topology& topo) {
    std::map<std::string, int> indeg;
    std::map<std::string, std::vector<std::string>> adj;
    for (const auto& o : topo.operators) indeg[o.id] = 0;
    for (const auto& e : topo.edges) {
        if (!topo.find_operator(e.to)) continue;
        if (!topo.find_operator(e.from)) continue;  // source edges do not constrain order
        adj[e.from].push_back(e.to);
        indeg[e.to]++;
    }

    std::priority_queue<std::string, std::vector<std::string>, std::greater<>> ready;
    for (const auto& [id, d] : indeg)
        if (d == 0) ready.push(id);

    std::vector<std::string> order;
    while (!ready.empty()) {
        std::string cur = ready.top();
        ready.pop();
        order.push_back(cur);
        for (const auto& nxt : adj[cur])
            if (--indeg[nxt] == 0) ready.push(nxt);
    }
    if (order.size() != topo.operators.size()) return {};
    return order;
}

} // namespace cepshed
