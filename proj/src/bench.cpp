#include "cepshed/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "cepshed/common.hpp"

namespace cepshed {

namespace {

// Bottleneck LP with the planner's shape, built directly: one x per
// (query, used type), one y per query, one min-constraint per pair, one
// output cap per query, one processing-time budget row.
lp::Problem synth_problem(int types, int queries, double share, std::uint64_t seed) {
    std::mt19937_64 rng = seeded_rng(seed, "bench");
    std::uniform_real_distribution<double> rate_dist(50.0, 500.0);
    std::uniform_real_distribution<double> ptime_dist(100.0, 1000.0);

    std::vector<double> lambda(types);
    double lambda_total = 0.0;
    for (int t = 0; t < types; t++) {
        lambda[t] = rate_dist(rng);
        lambda_total += lambda[t];
    }
    std::vector<double> ptime_us(queries);
    for (int q = 0; q < queries; q++) ptime_us[q] = ptime_dist(rng);

    int used = std::max(1, static_cast<int>(std::lround(share * types)));

    lp::Problem prob;
    prob.maximize = true;
    std::vector<int> y(queries);
    for (int q = 0; q < queries; q++) {
        y[q] = prob.add_variable("y_q" + std::to_string(q), 0.0, lp::kInf);
        prob.objective[y[q]] = 1.0;
    }

    std::map<int, double> mass;
    double p_full = 0.0;
    for (int q = 0; q < queries; q++) {
        for (int i = 0; i < used; i++) {
            int t = (q + i) % types;
            int x = prob.add_variable("x_q" + std::to_string(q) + "_" + std::to_string(t), 0.0,
                                      1.0, /*start_at_upper=*/true);
            prob.add_constraint("sel_q" + std::to_string(q) + "_" + std::to_string(t),
                                {{y[q], 1.0}, {x, -lambda[t]}}, lp::Relation::Le, 0.0);
            double coeff = (lambda[t] / lambda_total) * ptime_us[q] * 1e-6;
            mass[x] = coeff;
            p_full += coeff;
        }
        prob.add_constraint("cap_q" + std::to_string(q), {{y[q], 1.0}}, lp::Relation::Le,
                            lambda_total);
    }
    prob.add_constraint("avg_ptime", mass, lp::Relation::Le, 0.5 * p_full);
    return prob;
}

} // namespace

BenchPoint bench_lp(int types, int queries, double share, int reps, std::uint64_t seed) {
    if (types < 1 || queries < 1 || share <= 0.0 || share > 1.0)
        throw std::invalid_argument("bench dimensions must be >=1 and share in (0,1]");
    BenchPoint pt;
    pt.types = types;
    pt.queries = queries;
    pt.share = share;

    lp::Problem prob = synth_problem(types, queries, share, seed);
    pt.variables = static_cast<int>(prob.variables.size());
    pt.constraints = static_cast<int>(prob.constraints.size());

    std::vector<double> times;
    for (int r = 0; r < std::max(1, reps); r++) {
        auto t0 = std::chrono::steady_clock::now();
        lp::Solution sol = lp::solve(prob);
        auto t1 = std::chrono::steady_clock::now();
        times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        pt.iterations = sol.iterations;
        pt.status = sol.status;
    }
    std::sort(times.begin(), times.end());
    pt.wall_ms = times[times.size() / 2];
    return pt;
}

std::string bench_csv(const std::vector<BenchPoint>& points) {
    std::ostringstream out;
    out << "types,queries,share,ms,iterations,variables,constraints,status\n";
    for (const auto& p : points)
        out << p.types << "," << p.queries << "," << p.share << "," << p.wall_ms << ","
            << p.iterations << "," << p.variables << "," << p.constraints << ","
            << lp::status_name(p.status) << "\n";
    return out.str();
}

} // namespace cepshed
