#pragma once

#include <string>

#include "cepshed/core_model.hpp"
#include "cepshed/planner.hpp"
#include "cepshed/shedding.hpp"

namespace cepshed {
namespace oracle {

/// Direct evaluation of the planning model for one candidate configuration,
/// written independently of the LP machinery: pattern outputs are computed
/// by literal min/max recursion over the graph with the same fixing rules
/// the planner uses (non-successors keep their measured rates). Used to
/// cross-check LP optima.
struct Instance {
    const Topology* topo;
    const Snapshot* snap;
    std::string bottleneck;
    double p_star_s;
    PlanObjective objective = PlanObjective::Global;
};

/// Objective value of `config` under the instance's model.
double evaluate(const Instance& inst, const ShedderConfig& config);

/// Eq.-3 feasibility of the configuration at the bottleneck.
bool feasible(const Instance& inst, const ShedderConfig& config);

struct GridResult {
    ShedderConfig best;
    double objective = 0.0;
    std::size_t evaluated = 0;
    bool found = false;
};

/// Exhaustive search over the bottleneck's ratio space on a uniform grid of
/// the given step. Exponential in the number of (pattern, type) pairs; meant
/// for small verification instances.
GridResult grid_search(const Instance& inst, double step);

} // namespace oracle
} // namespace cepshed
