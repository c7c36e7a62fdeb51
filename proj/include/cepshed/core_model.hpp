#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cepshed/common.hpp"

namespace cepshed {

struct EventType {
    TypeId id = -1;
    std::string name;
};

struct Event {
    TypeId type = -1;
    double ts_ms = 0.0;       // virtual time of creation, milliseconds
    std::uint64_t id = 0;     // unique per simulation run
    AttrMap attrs;
};

// ---------------------------------------------------------------------------
// Pattern ASTs
// ---------------------------------------------------------------------------

struct AttrEquals {
    std::string key;
    AttrValue value;
};

struct PatternAst {
    enum class Kind { Seq, And, Or, Atom };

    Kind kind = Kind::Atom;
    TypeId atom_type = -1;                  // Atom only
    std::optional<AttrEquals> predicate;    // Atom only, closed-set property
    std::vector<PatternAst> children;       // Seq/And/Or

    static PatternAst atom(TypeId t) {
        PatternAst a;
        a.kind = Kind::Atom;
        a.atom_type = t;
        return a;
    }
    static PatternAst node(Kind k, std::vector<PatternAst> ch) {
        PatternAst n;
        n.kind = k;
        n.children = std::move(ch);
        return n;
    }

    /// All atom types in the subtree (with duplicates).
    void collect_atom_types(std::vector<TypeId>& out) const;
};

struct PatternSpec {
    std::string id;
    PatternAst ast;
    double window_ms = 0.0;
    TypeId output_type = -1;
    int f = 1;                 // outputs emitted per match
    double ptime_us = 0.0;     // nominal per-event processing cost

    /// Distinct input types of this pattern.
    std::set<TypeId> input_types() const;
};

struct OperatorSpec {
    std::string id;
    std::vector<PatternSpec> patterns;
    std::optional<double> latency_bound_ms;     // B*, required for the bottleneck
    std::optional<double> service_rate_hint;    // calibration override for mu

    std::set<TypeId> input_types() const;
    std::set<TypeId> output_types() const;
};

struct SourceSpec {
    std::string id;
    std::vector<TypeId> emits;
    std::map<TypeId, double> default_rates;  // events/s, may be overridden by a workload
};

struct SinkSpec {
    std::string id;
    double weight = 1.0;
};

struct Edge {
    std::string from;
    std::string to;
    std::vector<TypeId> types;
};

// Closed-set property atoms are rewritten into virtual types at load time so
// that shedding, selectivity and the LP all work on one notion of "type".
struct VirtualTypeRule {
    TypeId base_type = -1;
    std::string attr_key;
    AttrValue attr_value;
    TypeId virtual_type = -1;
};

struct Violation {
    std::string code;    // stable diagnostic code
    std::string detail;
};

struct Topology {
    std::vector<EventType> types;
    std::vector<SourceSpec> sources;
    std::vector<OperatorSpec> operators;
    std::vector<SinkSpec> sinks;
    std::vector<Edge> edges;
    std::vector<VirtualTypeRule> virtual_types;

    const OperatorSpec* find_operator(const std::string& id) const;
    const SourceSpec* find_source(const std::string& id) const;
    const SinkSpec* find_sink(const std::string& id) const;
    const PatternSpec* find_pattern(const std::string& id) const;
    const std::string* operator_of_pattern(const std::string& pattern_id) const;
    bool has_type(TypeId t) const;

    /// Producers of a type: source ids and pattern ids whose output is t.
    std::vector<std::string> producers_of_type(TypeId t) const;

    /// Reclassify an event against the virtual-type rules. Returns the
    /// virtual type when a (type, attr, value) rule matches, else the
    /// original type.
    TypeId classify(const Event& e) const;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Checks every structural invariant; one entry per violation. Empty result
/// means the topology is usable.
std::vector<Violation> validate(const Topology& topo);

/// Operators and sinks that directly consume the pattern's output type.
std::set<std::string> successors(const Topology& topo, const std::string& pattern_id);

/// Transitive successor closure of an operator, excluding the operator
/// itself and excluding sinks.
std::set<std::string> transitive_successors(const Topology& topo, const std::string& op_id);

/// Operator ids in topological order (sources first implicitly). Empty when
/// the graph has a cycle.
std::vector<std::string> topological_order(const Topology& topo);

} // namespace cepshed
