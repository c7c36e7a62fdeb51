#pragma once

#include <map>
#include <string>
#include <vector>

#include "cepshed/core_model.hpp"
#include "cepshed/shedding.hpp"

namespace cepshed {

/// Conditional selectivity of one pattern: expected output rate as a
/// function of per-type input rates.
///
/// Seq and And reduce to MIN over lambda_T / k_T where k_T counts how often
/// the type appears among the atoms (sequences are rated like And because a
/// distributed setting gives no global arrival order). Or takes the MAX of
/// its branches. Mixed nesting is normalized into disjunctive form: a set of
/// multiplicity groups, MIN inside a group, MAX across groups.
struct SelectivityFn {
    using Group = std::map<TypeId, int>;  // type -> required count

    std::string pattern_id;
    int f = 1;
    std::vector<Group> groups;  // >=1; one group => plain MIN combinator

    enum class Combinator { Min, Max };
    Combinator combinator() const { return groups.size() == 1 ? Combinator::Min : Combinator::Max; }
};

/// Normalizes a pattern AST into its selectivity function. Throws on ASTs
/// that violate the model (empty nodes, unknown kinds).
SelectivityFn build_selectivity(const PatternSpec& pattern);

/// Expected output rate for the given per-type input rates. Missing types
/// count as rate 0; negative rates are rejected.
double predict_output(const SelectivityFn& fn, const std::map<TypeId, double>& input_rates);

struct RatePrediction {
    std::map<std::string, double> sink_rates;     // sink id -> events/s
    std::map<std::string, double> pattern_rates;  // pattern id -> events/s
    std::map<std::string, std::map<TypeId, double>> operator_inputs;  // per-type arrivals
};

/// Composes the per-pattern selectivity functions over the operator graph to
/// predict steady-state pattern and sink rates from source rates under a
/// shedding configuration. Outputs of an operator whose total match rate
/// would exceed its processing rate are scaled down proportionally.
RatePrediction predict_sinks(const Topology& topo,
                             const std::map<std::string, std::map<TypeId, double>>& source_rates,
                             const ShedderConfig& config);

/// Synthesizes a measurement snapshot from the steady-state rate model with
/// no shedding: arrival rates from composed predictions, processing times
/// from the pattern specs. Stands in for live monitoring when planning or
/// grid-searching offline.
Snapshot model_snapshot(const Topology& topo,
                        const std::map<std::string, std::map<TypeId, double>>& source_rates);

} // namespace cepshed
