#pragma once

#include <map>
#include <optional>
#include <random>
#include <string>

#include "cepshed/common.hpp"
#include "cepshed/core_model.hpp"

namespace cepshed {

/// Per-(pattern, type) processing ratios. r is the share of events of a type
/// that the pattern processes; 1-r is shed. Missing entries mean r = 1.
class ShedderConfig {
public:
    double ratio(const std::string& pattern_id, TypeId type) const {
        auto it = ratios_.find({pattern_id, type});
        return it == ratios_.end() ? 1.0 : it->second;
    }

    void set(const std::string& pattern_id, TypeId type, double r) {
        if (r < 0.0 || r > 1.0) throw std::invalid_argument("processing ratio outside [0,1]");
        ratios_[{pattern_id, type}] = r;
    }

    bool sheds_anything() const {
        for (const auto& [k, r] : ratios_)
            if (r < 1.0) return true;
        return false;
    }

    bool empty() const { return ratios_.empty(); }

    const std::map<std::pair<std::string, TypeId>, double>& entries() const { return ratios_; }

    std::string to_json() const;
    static ShedderConfig from_json(const std::string& text);

private:
    std::map<std::pair<std::string, TypeId>, double> ratios_;
};

/// Bernoulli shedding decision: process with probability r(pattern, type).
/// Always consumes exactly one draw so that runs with different configs see
/// identical random streams.
bool should_process(const ShedderConfig& config, const std::string& pattern_id, TypeId type,
                    std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Queueing math (M/M/1)
// ---------------------------------------------------------------------------

/// Mean time an event spends at the operator, 1/(mu - lambda). Throws
/// OverloadError when lambda >= mu (infinite queueing).
double sojourn_time(double lambda, double mu);

/// The largest mean processing time p* that keeps the sojourn within
/// bound_s at arrival rate lambda: p* = 1 / (1/bound_s + lambda).
double feasible_ptime(double bound_s, double lambda);

// ---------------------------------------------------------------------------
// Snapshots
// ---------------------------------------------------------------------------

/// Measured state of one operator, the LP's parameters.
struct OperatorSnapshot {
    double lambda_total = 0.0;                        // events/s, summed upstream outputs
    std::map<TypeId, double> lambda_by_type;          // events/s per input type
    std::map<std::string, double> ptime_by_pattern_us;
    std::map<std::string, double> output_rate_by_pattern;  // events/s
    double mu = 0.0;   // processing rate, 1/p
    double rho = 0.0;  // utilization lambda/mu
};

struct Snapshot {
    double t_ms = 0.0;
    std::map<std::string, OperatorSnapshot> operators;
    std::map<std::string, std::map<TypeId, double>> source_rates;

    const OperatorSnapshot* find(const std::string& op_id) const {
        auto it = operators.find(op_id);
        return it == operators.end() ? nullptr : &it->second;
    }
};

/// Average processing time per arriving event under the configuration
/// (seconds): sum over types of the type share times the processed patterns'
/// costs. A pattern only costs time for types it actually uses; shed shares
/// contribute zero. Returns 0 when the operator sees no arrivals.
double avg_ptime(const Topology& topo, const Snapshot& snap, const ShedderConfig& config,
                 const std::string& op_id);

/// A configuration is feasible when its induced mean processing time stays
/// within p* for the bound and the operator remains stable.
bool is_feasible(const Topology& topo, const Snapshot& snap, const ShedderConfig& config,
                 const std::string& op_id, double bound_s);

} // namespace cepshed
