#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cepshed/common.hpp"

namespace cepshed {

enum class ArrivalProcess { Poisson, Constant };

/// Multiplies source rates at a point in virtual time. An empty source id
/// applies to every source.
struct RateStep {
    double t_ms = 0.0;
    double scale = 1.0;
    std::string source;
};

struct WorkloadSpec {
    std::string mode = "balanced_synthetic";  // balanced_synthetic | unbalanced_synthetic | trace
    ArrivalProcess arrival = ArrivalProcess::Poisson;
    double duration_ms = 60000.0;
    std::uint64_t seed = 1;
    std::map<std::string, std::map<TypeId, double>> source_rates;  // events/s
    std::vector<RateStep> steps;

    // trace mode
    std::vector<std::string> trace_paths;
    double trace_time_scale = 1.0;  // multiplies trace timestamps into ms

    bool is_trace() const { return mode == "trace"; }

    std::string to_json() const;
    static WorkloadSpec from_json(const std::string& text);
    static WorkloadSpec load(const std::string& path);

    /// Basic sanity: non-negative rates, positive duration, readable trace
    /// configuration.
    std::vector<std::string> check() const;
};

} // namespace cepshed
