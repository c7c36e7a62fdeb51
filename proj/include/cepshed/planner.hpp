#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cepshed/core_model.hpp"
#include "cepshed/lp.hpp"
#include "cepshed/selectivity.hpp"
#include "cepshed/shedding.hpp"

namespace cepshed {

enum class PlanObjective {
    Global,  // maximize weighted arrivals at the sinks
    Local    // maximize the bottleneck's own pattern outputs
};

/// One linear program for one OR-branch choice. x variables exist only for
/// the bottleneck's (pattern, used-type) pairs; y variables are free for
/// patterns at the bottleneck and its transitive successors and fixed to
/// measured output rates everywhere else. That fixing is what keeps the
/// program linear.
struct LpBuild {
    lp::Problem problem;
    std::map<std::pair<std::string, TypeId>, int> x_index;
    std::map<std::string, int> y_index;
    // Processing-mass expression (the Eq.-3 left side); doubles as the
    // secondary objective that sheds as much as possible among
    // output-optimal solutions.
    std::map<int, double> shed_mass;
    // Weighted sink arrivals from patterns whose output is fixed; added to
    // the LP objective value when reporting the predicted application output.
    double fixed_sink_rate = 0.0;
    std::vector<size_t> or_choice;  // chosen group per OR pattern, branch id
};

/// Builds the branch set for the given bottleneck and processing-time budget
/// p_star (seconds). Patterns whose selectivity has several MAX groups spawn
/// one branch per group, capped at `max_branches` total; past the cap the
/// MAX is over-approximated by a sum bound in a single program.
std::vector<LpBuild> build_lp(const Topology& topo, const Snapshot& snap,
                              const std::string& bottleneck, double p_star_s,
                              PlanObjective objective, int max_branches = 8,
                              bool* or_overapproximated = nullptr);

struct PlanResult {
    lp::Status status = lp::Status::Infeasible;
    ShedderConfig config;
    double objective = 0.0;           // LP objective of the chosen branch
    double predicted_output = 0.0;    // weighted sink arrivals incl. fixed patterns
    int branches = 1;
    int chosen_branch = 0;
    int iterations = 0;
    bool or_overapproximated = false;
    std::string lp_text;              // filled when dump_lp is set
};

/// Full planning step: build, solve every branch, lexicographically refine
/// (max output, then min processing mass), extract the configuration.
PlanResult plan(const Topology& topo, const Snapshot& snap, const std::string& bottleneck,
                double p_star_s, PlanObjective objective, bool dump_lp = false);

/// Pulls the shedder configuration out of a solved branch: r equals the x
/// value for every bottleneck pair, 1 elsewhere.
ShedderConfig extract_config(const LpBuild& build, const lp::Solution& sol);

/// Fallback when the LP fails: uniform ratios scaled so the Eq.-3 mean
/// processing time meets p_star.
ShedderConfig uniform_fallback(const Topology& topo, const Snapshot& snap,
                               const std::string& bottleneck, double p_star_s);

} // namespace cepshed
