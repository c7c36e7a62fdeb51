#pragma once

#include <limits>
#include <map>
#include <string>
#include <vector>

namespace cepshed {

namespace lp {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Relation { Le, Eq, Ge };

struct Variable {
    std::string name;
    double lower = 0.0;
    double upper = kInf;
    // Nonbasic start value. Shedding ratios start at their upper bound
    // (process everything), which keeps the initial basis close to the
    // typical optimum and the pivot count low.
    bool start_at_upper = false;
};

struct Constraint {
    std::string name;
    std::map<int, double> coeffs;  // variable index -> coefficient
    Relation rel = Relation::Le;
    double rhs = 0.0;
};

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

struct Solution {
    Status status = Status::Infeasible;
    std::vector<double> values;
    double objective = 0.0;
    int iterations = 0;
};

struct Problem {
    std::vector<Variable> variables;
    std::vector<Constraint> constraints;
    std::map<int, double> objective;  // linear coefficients
    bool maximize = true;

    int add_variable(const std::string& name, double lower, double upper,
                     bool start_at_upper = false) {
        variables.push_back({name, lower, upper, start_at_upper});
        return static_cast<int>(variables.size()) - 1;
    }

    void add_constraint(const std::string& name, std::map<int, double> coeffs, Relation rel,
                        double rhs) {
        constraints.push_back({name, std::move(coeffs), rel, rhs});
    }

    double eval_objective(const std::vector<double>& values) const {
        double out = 0.0;
        for (const auto& [j, c] : objective) out += c * values[j];
        return out;
    }

    /// Empty result when every referenced variable is declared and all
    /// bounds are sane; diagnostics otherwise.
    std::vector<std::string> check() const;

    /// Human-readable LP-format dump for cross-checking with external
    /// solvers.
    std::string to_lp_format() const;
};

/// Two-phase primal simplex with variable bounds handled implicitly.
/// Dantzig pricing with a fallback to Bland's rule after a run of
/// degenerate pivots, so termination is guaranteed. Deterministic: the same
/// problem always yields the same vertex.
Solution solve(const Problem& problem);

/// Solves for the primary objective, then re-solves minimizing `secondary`
/// among the primary-optimal solutions (the primary objective is pinned via
/// an extra constraint). Returns the refined solution with the primary
/// objective value.
Solution lexico_min_secondary(const Problem& problem, const std::map<int, double>& secondary);

const char* status_name(Status s);

} // namespace lp

} // namespace cepshed
