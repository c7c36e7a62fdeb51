#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cepshed/lp.hpp"

namespace cepshed {

struct BenchPoint {
    int types = 0;
    int queries = 0;
    double share = 1.0;  // fraction of types each query uses
    double wall_ms = 0.0;
    int iterations = 0;
    lp::Status status = lp::Status::Optimal;
    int variables = 0;
    int constraints = 0;
};

/// Builds a synthetic bottleneck program of the given dimensions (random
/// rates and costs, budget at half the unshedded mean processing time) and
/// times the solver. `reps` runs, the median wall time is reported.
BenchPoint bench_lp(int types, int queries, double share, int reps, std::uint64_t seed);

std::string bench_csv(const std::vector<BenchPoint>& points);

} // namespace cepshed
