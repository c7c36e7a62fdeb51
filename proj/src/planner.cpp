#include "cepshed/planner.hpp"

#include <algorithm>
#include <cmath>

namespace cepshed {

namespace {

struct FreePattern {
    const OperatorSpec* op;
    const PatternSpec* pattern;
    SelectivityFn selectivity;
    bool at_bottleneck;
};

double snapshot_mu(const OperatorSpec& op, const OperatorSnapshot* os) {
    if (os && os->mu > 0) return os->mu;
    if (op.service_rate_hint) return *op.service_rate_hint;
    return lp::kInf;
}

double pattern_ptime_us(const PatternSpec& pat, const OperatorSnapshot* os) {
    if (os) {
        auto it = os->ptime_by_pattern_us.find(pat.id);
        if (it != os->ptime_by_pattern_us.end()) return it->second;
    }
    return pat.ptime_us;
}

} // namespace

std::vector<LpBuild> build_lp(const Topology& topo, const Snapshot& snap,
                              const std::string& bottleneck, double p_star_s,
                              PlanObjective objective, int max_branches,
                              bool* or_overapproximated) {
    const OperatorSpec* bop = topo.find_operator(bottleneck);
    if (!bop) throw std::invalid_argument("unknown bottleneck operator: " + bottleneck);
    const OperatorSnapshot* bsnap = snap.find(bottleneck);
    if (!bsnap) throw std::runtime_error("snapshot missing bottleneck operator " + bottleneck);

    std::set<std::string> free_ops = transitive_successors(topo, bottleneck);
    free_ops.insert(bottleneck);

    // Free patterns in deterministic (topological, then declaration) order.
    std::vector<FreePattern> free_patterns;
    for (const auto& op_id : topological_order(topo)) {
        if (!free_ops.count(op_id)) continue;
        const OperatorSpec* op = topo.find_operator(op_id);
        for (const auto& pat : op->patterns)
            free_patterns.push_back({op, &pat, build_selectivity(pat), op_id == bottleneck});
    }

    // Enumerate OR branches: one group choice per multi-group pattern.
    std::vector<size_t> group_counts;
    long long combinations = 1;
    for (const auto& fp : free_patterns) {
        group_counts.push_back(fp.selectivity.groups.size());
        combinations *= static_cast<long long>(fp.selectivity.groups.size());
        combinations = std::min(combinations, 1000000ll);
    }
    bool overapprox = combinations > max_branches;
    if (or_overapproximated) *or_overapproximated = overapprox;
    std::vector<std::vector<size_t>> branches;
    if (!overapprox) {
        std::vector<size_t> choice(free_patterns.size(), 0);
        for (;;) {
            branches.push_back(choice);
            size_t k = 0;
            while (k < choice.size()) {
                if (++choice[k] < group_counts[k]) break;
                choice[k] = 0;
                k++;
            }
            if (k == choice.size()) break;
        }
    } else {
        branches.push_back({});  // single program with sum bounds
    }

    std::vector<LpBuild> out;
    for (const auto& choice : branches) {
        LpBuild b;
        b.or_choice = choice;
        lp::Problem& prob = b.problem;
        prob.maximize = true;

        // Decision variables.
        for (const auto& fp : free_patterns) {
            b.y_index[fp.pattern->id] =
                prob.add_variable("y_" + fp.pattern->id, 0.0, lp::kInf, false);
            if (!fp.at_bottleneck) continue;
            for (TypeId t : fp.pattern->input_types()) {
                b.x_index[{fp.pattern->id, t}] =
                    prob.add_variable("x_" + fp.pattern->id + "_" + std::to_string(t), 0.0, 1.0,
                                      /*start_at_upper=*/true);
            }
        }

        // Per-type arrival expression at a free operator: constant part plus
        // free-y terms, derived from the in-edges.
        auto arrivals_of = [&](const std::string& op_id, TypeId t) {
            double constant = 0.0;
            std::map<int, double> terms;
            for (const auto& e : topo.edges) {
                if (e.to != op_id) continue;
                if (std::find(e.types.begin(), e.types.end(), t) == e.types.end()) continue;
                if (const SourceSpec* src = topo.find_source(e.from)) {
                    auto sit = snap.source_rates.find(src->id);
                    if (sit == snap.source_rates.end())
                        throw std::runtime_error("snapshot missing source rates for " + src->id);
                    auto rit = sit->second.find(t);
                    constant += rit == sit->second.end() ? 0.0 : rit->second;
                    continue;
                }
                const OperatorSpec* from_op = topo.find_operator(e.from);
                if (!from_op) continue;
                for (const auto& pat : from_op->patterns) {
                    if (pat.output_type != t) continue;
                    auto yit = b.y_index.find(pat.id);
                    if (yit != b.y_index.end()) {
                        terms[yit->second] += 1.0;
                    } else {
                        const OperatorSnapshot* os = snap.find(from_op->id);
                        if (!os || !os->output_rate_by_pattern.count(pat.id))
                            throw std::runtime_error("snapshot missing output rate of pattern " +
                                                     pat.id);
                        constant += os->output_rate_by_pattern.at(pat.id);
                    }
                }
            }
            return std::make_pair(constant, terms);
        };

        for (size_t pi = 0; pi < free_patterns.size(); pi++) {
            const FreePattern& fp = free_patterns[pi];
            const PatternSpec& pat = *fp.pattern;
            int y = b.y_index.at(pat.id);
            double f = pat.f;

            std::vector<size_t> use_groups;
            if (overapprox)
                for (size_t g = 0; g < fp.selectivity.groups.size(); g++) use_groups.push_back(g);
            else
                use_groups.push_back(choice[pi]);

            // For an over-approximated MAX, per-group helper outputs sum up
            // to bound y from above.
            std::vector<int> group_vars;
            bool split = overapprox && fp.selectivity.groups.size() > 1;
            for (size_t g : use_groups) {
                int yg = y;
                if (split)
                    yg = prob.add_variable("y_" + pat.id + "_g" + std::to_string(g), 0.0, lp::kInf,
                                           false);
                group_vars.push_back(yg);

                for (const auto& [t, k] : fp.selectivity.groups[g]) {
                    if (fp.at_bottleneck) {
                        auto lit = bsnap->lambda_by_type.find(t);
                        double lam = lit == bsnap->lambda_by_type.end() ? 0.0 : lit->second;
                        int x = b.x_index.at({pat.id, t});
                        prob.add_constraint(
                            "sel_" + pat.id + "_" + std::to_string(t),
                            {{yg, 1.0}, {x, -(f / k) * lam}}, lp::Relation::Le, 0.0);
                    } else {
                        auto [constant, terms] = arrivals_of(fp.op->id, t);
                        std::map<int, double> coeffs = {{yg, 1.0}};
                        for (const auto& [var, c] : terms) coeffs[var] -= (f / k) * c;
                        prob.add_constraint("sel_" + pat.id + "_" + std::to_string(t), coeffs,
                                            lp::Relation::Le, (f / k) * constant);
                    }
                }
            }
            if (split) {
                std::map<int, double> sum = {{y, 1.0}};
                for (int yg : group_vars) sum[yg] -= 1.0;
                prob.add_constraint("or_sum_" + pat.id, sum, lp::Relation::Le, 0.0);
            }

            // Output cap: a pattern cannot emit faster than the operator
            // processes events.
            double mu = snapshot_mu(*fp.op, snap.find(fp.op->id));
            if (std::isfinite(mu))
                prob.add_constraint("cap_" + pat.id, {{y, 1.0}}, lp::Relation::Le, f * mu);
        }

        // Mean processing-time budget at the bottleneck. Coefficients are
        // (lambda_T / lambda) * ptime of the pattern, in seconds.
        if (bsnap->lambda_total > 0) {
            std::map<int, double> mass;
            for (const auto& fp : free_patterns) {
                if (!fp.at_bottleneck) continue;
                double pt_s = pattern_ptime_us(*fp.pattern, bsnap) * 1e-6;
                for (TypeId t : fp.pattern->input_types()) {
                    auto lit = bsnap->lambda_by_type.find(t);
                    double lam = lit == bsnap->lambda_by_type.end() ? 0.0 : lit->second;
                    int x = b.x_index.at({fp.pattern->id, t});
                    mass[x] += (lam / bsnap->lambda_total) * pt_s;
                }
            }
            b.shed_mass = mass;
            prob.add_constraint("avg_ptime", mass, lp::Relation::Le, p_star_s);
        }

        // Objective.
        if (objective == PlanObjective::Local) {
            for (const auto& fp : free_patterns)
                if (fp.at_bottleneck) prob.objective[b.y_index.at(fp.pattern->id)] += 1.0;
        } else {
            for (const auto& op : topo.operators) {
                for (const auto& pat : op.patterns) {
                    double w = 0.0;
                    for (const auto& consumer : successors(topo, pat.id))
                        if (const SinkSpec* sink = topo.find_sink(consumer)) w += sink->weight;
                    if (w <= 0) continue;
                    auto yit = b.y_index.find(pat.id);
                    if (yit != b.y_index.end()) {
                        prob.objective[yit->second] += w;
                    } else {
                        const OperatorSnapshot* os = snap.find(op.id);
                        if (os && os->output_rate_by_pattern.count(pat.id))
                            b.fixed_sink_rate += w * os->output_rate_by_pattern.at(pat.id);
                    }
                }
            }
        }

        out.push_back(std::move(b));
    }
    return out;
}

ShedderConfig extract_config(const LpBuild& build, const lp::Solution& sol) {
    if (sol.status != lp::Status::Optimal)
        throw std::runtime_error("cannot extract a configuration from a non-optimal LP solution");
    ShedderConfig cfg;
    for (const auto& [key, var] : build.x_index) {
        double r = std::clamp(sol.values[var], 0.0, 1.0);
        cfg.set(key.first, key.second, r);
    }
    return cfg;
}

ShedderConfig uniform_fallback(const Topology& topo, const Snapshot& snap,
                               const std::string& bottleneck, double p_star_s) {
    const OperatorSpec* op = topo.find_operator(bottleneck);
    ShedderConfig none;
    double p_full = avg_ptime(topo, snap, none, bottleneck);
    double scale = p_full > 0 ? std::clamp(p_star_s / p_full, 0.0, 1.0) : 1.0;
    ShedderConfig cfg;
    for (const auto& pat : op->patterns)
        for (TypeId t : pat.input_types()) cfg.set(pat.id, t, scale);
    return cfg;
}

PlanResult plan(const Topology& topo, const Snapshot& snap, const std::string& bottleneck,
                double p_star_s, PlanObjective objective, bool dump_lp) {
    PlanResult res;
    auto builds = build_lp(topo, snap, bottleneck, p_star_s, objective, 8,
                           &res.or_overapproximated);
    res.branches = static_cast<int>(builds.size());

    int best = -1;
    lp::Solution best_sol;
    for (size_t i = 0; i < builds.size(); i++) {
        lp::Solution sol = lp::lexico_min_secondary(builds[i].problem, builds[i].shed_mass);
        res.iterations += sol.iterations;
        if (sol.status != lp::Status::Optimal) continue;
        if (best < 0 || sol.objective > best_sol.objective + 1e-12) {
            best = static_cast<int>(i);
            best_sol = sol;
        }
    }

    if (best < 0) {
        res.status = builds.empty() ? lp::Status::Infeasible : lp::Status::Infeasible;
        return res;
    }

    res.status = lp::Status::Optimal;
    res.chosen_branch = best;
    res.config = extract_config(builds[best], best_sol);
    res.objective = best_sol.objective;
    res.predicted_output = best_sol.objective + builds[best].fixed_sink_rate;
    if (dump_lp) res.lp_text = builds[best].problem.to_lp_format();
    return res;
}

} // namespace cepshed
