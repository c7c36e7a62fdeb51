#include "cepshed/lp.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace cepshed {
namespace lp {

namespace {

constexpr double kFeasTol = 1e-9;
constexpr double kCostTol = 1e-9;
constexpr double kPivotTol = 1e-9;
constexpr int kIterationLimit = 200000;

// Dense-tableau bounded-variable simplex. The tableau holds B^{-1}A for all
// columns; current variable values are tracked directly so nonbasic
// variables may rest at either bound.
class Simplex {
public:
    Simplex(const Problem& p) : prob_(p) { build(); }

    Solution run() {
        Solution sol;

        if (need_phase1_) {
            load_costs(phase1_costs_);
            Status s1 = iterate();
            if (s1 == Status::IterationLimit) return finish(sol, s1);
            if (objective_value(phase1_costs_) > 1e-7) return finish(sol, Status::Infeasible);
            pin_artificials();
        }

        load_costs(costs_);
        Status s2 = iterate();
        return finish(sol, s2);
    }

private:
    const Problem& prob_;

    int m_ = 0;          // rows
    int n_ = 0;          // columns: structural + slack + artificial
    int stride_ = 0;     // allocated row width (>= n_)
    int n_struct_ = 0;
    std::vector<double> tab_;    // m x stride row-major
    std::vector<double> lower_, upper_, val_;
    std::vector<int> basis_;     // row -> column
    std::vector<int> row_of_;    // column -> row or -1
    std::vector<double> costs_;        // phase-2 (minimization) costs
    std::vector<double> phase1_costs_;
    std::vector<double> red_;    // reduced costs of the active phase
    bool need_phase1_ = false;
    int iterations_ = 0;
    bool bland_ = false;
    int degenerate_run_ = 0;

    double& tab(int i, int j) { return tab_[static_cast<size_t>(i) * stride_ + j]; }

    void build() {
        m_ = static_cast<int>(prob_.constraints.size());
        n_struct_ = static_cast<int>(prob_.variables.size());

        // Count slots: one slack per inequality, artificials added on demand.
        int n_slack = 0;
        for (const auto& c : prob_.constraints)
            if (c.rel != Relation::Eq) n_slack++;
        int max_cols = n_struct_ + n_slack + m_;

        tab_.assign(static_cast<size_t>(m_) * max_cols, 0.0);
        stride_ = max_cols;
        n_ = max_cols;  // final column count fixed up below
        lower_.assign(max_cols, 0.0);
        upper_.assign(max_cols, kInf);
        val_.assign(max_cols, 0.0);
        row_of_.assign(max_cols, -1);
        basis_.assign(m_, -1);

        for (int j = 0; j < n_struct_; j++) {
            const Variable& v = prob_.variables[j];
            lower_[j] = v.lower;
            upper_[j] = v.upper;
            val_[j] = (v.start_at_upper && std::isfinite(v.upper)) ? v.upper : v.lower;
        }

        int next_col = n_struct_;
        for (int i = 0; i < m_; i++) {
            const Constraint& c = prob_.constraints[i];
            // Residual once nonbasic structurals sit at their start bounds.
            double resid = c.rhs;
            for (const auto& [j, a] : c.coeffs) {
                tab(i, j) = a;
                resid -= a * val_[j];
            }

            double sign = 1.0;
            int slack = -1;
            if (c.rel != Relation::Eq) {
                slack = next_col++;
                sign = (c.rel == Relation::Le) ? 1.0 : -1.0;
                tab(i, slack) = sign;
            }
            double slack_val = sign * resid;  // value the slack would need
            if (slack >= 0 && slack_val >= -kFeasTol) {
                basis_[i] = slack;
                row_of_[slack] = i;
                val_[slack] = std::max(0.0, slack_val);
            } else {
                // Scale the row so the artificial enters with +1 and a
                // non-negative value.
                if (resid < 0) {
                    for (int j = 0; j < next_col; j++) tab(i, j) = -tab(i, j);
                    resid = -resid;
                }
                int art = next_col++;
                tab(i, art) = 1.0;
                upper_[art] = kInf;
                basis_[i] = art;
                row_of_[art] = i;
                val_[art] = resid;
                artificials_.push_back(art);
                need_phase1_ = true;
            }
        }
        n_ = next_col;

        costs_.assign(n_, 0.0);
        for (const auto& [j, cj] : prob_.objective) costs_[j] = prob_.maximize ? -cj : cj;
        phase1_costs_.assign(n_, 0.0);
        for (int a : artificials_) phase1_costs_[a] = 1.0;
    }

    std::vector<int> artificials_;
    std::set<int> fixed_cols_;

    void load_costs(const std::vector<double>& c) {
        red_.assign(n_, 0.0);
        for (int j = 0; j < n_; j++) red_[j] = c[j];
        for (int i = 0; i < m_; i++) {
            double cb = c[basis_[i]];
            if (cb == 0.0) continue;
            for (int j = 0; j < n_; j++) red_[j] -= cb * tab(i, j);
        }
    }

    double objective_value(const std::vector<double>& c) const {
        double out = 0.0;
        for (int j = 0; j < n_; j++) out += c[j] * val_[j];
        return out;
    }

    void pin_artificials() {
        // Drive basic artificials out where possible; pin all of them at 0.
        for (int a : artificials_) {
            int r = row_of_[a];
            if (r >= 0) {
                int piv = -1;
                for (int j = 0; j < n_struct_; j++) {
                    if (row_of_[j] >= 0) continue;
                    if (std::fabs(tab(r, j)) > 1e-7) {
                        piv = j;
                        break;
                    }
                }
                if (piv >= 0) pivot(r, piv, val_[piv]);
                // else: redundant row; the artificial stays basic at 0.
            }
            lower_[a] = upper_[a] = 0.0;
            fixed_cols_.insert(a);
        }
    }

    // Entering-variable choice. dir = +1 when the candidate rises off its
    // lower bound, -1 when it falls off its upper bound.
    bool price(int& enter, double& dir) {
        enter = -1;
        double best = kCostTol;
        for (int j = 0; j < n_; j++) {
            if (row_of_[j] >= 0) continue;
            if (fixed_cols_.count(j)) continue;
            if (upper_[j] - lower_[j] < kFeasTol && std::isfinite(upper_[j])) continue;
            bool at_lower = std::fabs(val_[j] - lower_[j]) <= kFeasTol;
            bool at_upper = std::isfinite(upper_[j]) && std::fabs(val_[j] - upper_[j]) <= kFeasTol;
            double score = 0.0;
            double d = 0.0;
            if (at_lower && red_[j] < -kCostTol) {
                score = -red_[j];
                d = 1.0;
            } else if (at_upper && red_[j] > kCostTol) {
                score = red_[j];
                d = -1.0;
            } else {
                continue;
            }
            if (bland_) {
                enter = j;
                dir = d;
                return true;
            }
            if (score > best) {
                best = score;
                enter = j;
                dir = d;
            }
        }
        return enter >= 0;
    }

    Status iterate() {
        for (;;) {
            int enter;
            double dir;
            if (!price(enter, dir)) return Status::Optimal;
            if (++iterations_ > kIterationLimit) return Status::IterationLimit;

            // Ratio test: how far can the entering variable travel before a
            // basic variable (or the entering variable itself) hits a bound?
            double limit = kInf;
            if (std::isfinite(upper_[enter])) limit = upper_[enter] - lower_[enter];
            int leave_row = -1;
            double leave_bound = 0.0;
            double best_pivot = 0.0;
            for (int i = 0; i < m_; i++) {
                double a = tab(i, enter) * dir;
                if (std::fabs(a) <= kPivotTol) continue;
                int k = basis_[i];
                double t;
                double bound;
                if (a > 0) {  // basic value falls toward its lower bound
                    if (!std::isfinite(lower_[k])) continue;
                    t = (val_[k] - lower_[k]) / a;
                    bound = lower_[k];
                } else {  // basic value rises toward its upper bound
                    if (!std::isfinite(upper_[k])) continue;
                    t = (upper_[k] - val_[k]) / (-a);
                    bound = upper_[k];
                }
                t = std::max(t, 0.0);
                if (t < limit - 1e-12) {
                    limit = t;
                    leave_row = i;
                    leave_bound = bound;
                    best_pivot = tab(i, enter);
                } else if (leave_row >= 0 && t <= limit + 1e-12) {
                    // Tied rows: prefer the larger pivot for stability;
                    // under Bland's rule, the smallest variable index.
                    bool better = bland_ ? basis_[i] < basis_[leave_row]
                                         : std::fabs(tab(i, enter)) > std::fabs(best_pivot);
                    if (better) {
                        leave_row = i;
                        leave_bound = bound;
                        best_pivot = tab(i, enter);
                    }
                }
            }

            if (!std::isfinite(limit)) return Status::Unbounded;

            if (limit <= kFeasTol)
                degenerate_run_++;
            else
                degenerate_run_ = 0;
            if (degenerate_run_ > 2 * m_ + 50) bland_ = true;

            double delta = dir * limit;
            if (leave_row < 0) {
                // Bound flip: the entering variable crosses to its other
                // bound without a basis change.
                for (int i = 0; i < m_; i++) {
                    double a = tab(i, enter);
                    if (a != 0.0) val_[basis_[i]] -= a * delta;
                }
                val_[enter] += delta;
                continue;
            }

            int leaving = basis_[leave_row];
            for (int i = 0; i < m_; i++) {
                double a = tab(i, enter);
                if (a != 0.0) val_[basis_[i]] -= a * delta;
            }
            val_[enter] += delta;
            val_[leaving] = leave_bound;  // snap to the bound it hit
            pivot(leave_row, enter, val_[enter]);
        }
    }

    void pivot(int row, int col, double value) {
        int leaving = basis_[row];
        double piv = tab(row, col);
        double* prow = &tab_[static_cast<size_t>(row) * stride_];
        double inv = 1.0 / piv;
        for (int j = 0; j < n_; j++) prow[j] *= inv;
        for (int i = 0; i < m_; i++) {
            if (i == row) continue;
            double f = tab(i, col);
            if (f == 0.0) continue;
            double* irow = &tab_[static_cast<size_t>(i) * stride_];
            for (int j = 0; j < n_; j++) irow[j] -= f * prow[j];
        }
        double fr = red_[col];
        if (fr != 0.0)
            for (int j = 0; j < n_; j++) red_[j] -= fr * prow[j];

        row_of_[leaving] = -1;
        row_of_[col] = row;
        basis_[row] = col;
        val_[col] = value;
    }

    Solution finish(Solution& sol, Status s) {
        sol.status = s;
        sol.iterations = iterations_;
        if (s == Status::Optimal || s == Status::IterationLimit) {
            sol.values.assign(prob_.variables.size(), 0.0);
            for (int j = 0; j < n_struct_; j++) {
                double v = val_[j];
                v = std::max(v, prob_.variables[j].lower);
                if (std::isfinite(prob_.variables[j].upper))
                    v = std::min(v, prob_.variables[j].upper);
                sol.values[j] = v;
            }
            sol.objective = prob_.eval_objective(sol.values);
        }
        return sol;
    }
};

} // namespace

std::vector<std::string> Problem::check() const {
    std::vector<std::string> out;
    for (size_t i = 0; i < constraints.size(); i++)
        for (const auto& [j, a] : constraints[i].coeffs) {
            (void)a;
            if (j < 0 || j >= static_cast<int>(variables.size()))
                out.push_back("constraint " + constraints[i].name +
                              " references undeclared variable index " + std::to_string(j));
        }
    for (const auto& [j, c] : objective) {
        (void)c;
        if (j < 0 || j >= static_cast<int>(variables.size()))
            out.push_back("objective references undeclared variable index " + std::to_string(j));
    }
    for (const auto& v : variables)
        if (v.lower > v.upper) out.push_back("variable " + v.name + " has lower > upper");
    return out;
}

std::string Problem::to_lp_format() const {
    std::ostringstream out;
    out << (maximize ? "Maximize" : "Minimize") << "\n obj:";
    for (const auto& [j, c] : objective)
        out << (c >= 0 ? " + " : " - ") << std::fabs(c) << " " << variables[j].name;
    out << "\nSubject To\n";
    for (const auto& c : constraints) {
        out << " " << c.name << ":";
        for (const auto& [j, a] : c.coeffs)
            out << (a >= 0 ? " + " : " - ") << std::fabs(a) << " " << variables[j].name;
        out << (c.rel == Relation::Le ? " <= " : c.rel == Relation::Ge ? " >= " : " = ");
        out << c.rhs << "\n";
    }
    out << "Bounds\n";
    for (const auto& v : variables) {
        out << " " << v.lower << " <= " << v.name;
        if (std::isfinite(v.upper)) out << " <= " << v.upper;
        out << "\n";
    }
    out << "End\n";
    return out.str();
}

Solution solve(const Problem& problem) {
    auto issues = problem.check();
    if (!issues.empty()) throw std::invalid_argument("malformed LP: " + issues.front());
    Simplex s(problem);
    Solution sol = s.run();

    // A claimed optimum must actually satisfy the constraints; anything else
    // is reported as a numerical failure rather than returned silently.
    if (sol.status == Status::Optimal) {
        for (const auto& c : problem.constraints) {
            double lhs = 0.0;
            for (const auto& [j, a] : c.coeffs) lhs += a * sol.values[j];
            double slack = c.rhs - lhs;
            double tol = 1e-6 * (1.0 + std::fabs(c.rhs));
            bool ok = (c.rel == Relation::Le && slack >= -tol) ||
                      (c.rel == Relation::Ge && slack <= tol) ||
                      (c.rel == Relation::Eq && std::fabs(slack) <= tol);
            if (!ok) {
                sol.status = Status::IterationLimit;
                break;
            }
        }
    }
    return sol;
}

Solution lexico_min_secondary(const Problem& problem, const std::map<int, double>& secondary) {
    Solution first = solve(problem);
    if (first.status != Status::Optimal || secondary.empty()) return first;

    Problem refined = problem;
    // Pin the primary objective, then minimize the secondary one.
    refined.add_constraint("primary_optimum", problem.objective,
                           problem.maximize ? Relation::Ge : Relation::Le,
                           problem.maximize ? first.objective - 1e-9 : first.objective + 1e-9);
    refined.objective = secondary;
    refined.maximize = false;

    Solution second = solve(refined);
    if (second.status != Status::Optimal) return first;
    second.objective = problem.eval_objective(second.values);
    second.iterations += first.iterations;
    return second;
}

const char* status_name(Status s) {
    switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::IterationLimit: return "iteration_limit";
    }
    return "unknown";
}

} // namespace lp
} // namespace cepshed
