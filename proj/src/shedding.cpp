#include "cepshed/shedding.hpp"

#include <json.hpp>

namespace cepshed {

std::string ShedderConfig::to_json() const {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& [key, r] : ratios_) {
        nlohmann::ordered_json entry;
        entry["pattern"] = key.first;
        entry["type"] = key.second;
        entry["r"] = r;
        arr.push_back(entry);
    }
    return arr.dump();
}

ShedderConfig ShedderConfig::from_json(const std::string& text) {
    ShedderConfig cfg;
    auto arr = nlohmann::json::parse(text);
    if (!arr.is_array()) throw ParseError("shedder config must be a JSON array");
    for (const auto& entry : arr)
        cfg.set(entry.at("pattern").get<std::string>(), entry.at("type").get<TypeId>(),
                entry.at("r").get<double>());
    return cfg;
}

bool should_process(const ShedderConfig& config, const std::string& pattern_id, TypeId type,
                    std::mt19937_64& rng) {
    double r = config.ratio(pattern_id, type);
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    return u < r;
}

double sojourn_time(double lambda, double mu) {
    if (lambda < 0 || mu <= 0) throw std::invalid_argument("rates must be non-negative, mu > 0");
    if (lambda >= mu)
        throw OverloadError("operator overloaded: lambda >= mu implies infinite queueing");
    return 1.0 / (mu - lambda);
}

double feasible_ptime(double bound_s, double lambda) {
    if (bound_s <= 0) throw std::invalid_argument("latency bound must be positive");
    if (lambda < 0) throw std::invalid_argument("arrival rate must be non-negative");
    // Equivalent to 1/(1/B + lambda), written to avoid the early division so
    // the bound round-trips through Eq. 2 at full precision.
    return bound_s / (1.0 + bound_s * lambda);
}

double avg_ptime(const Topology& topo, const Snapshot& snap, const ShedderConfig& config,
                 const std::string& op_id) {
    const OperatorSpec* op = topo.find_operator(op_id);
    if (!op) throw std::invalid_argument("unknown operator id: " + op_id);
    const OperatorSnapshot* os = snap.find(op_id);
    if (!os) throw std::invalid_argument("snapshot missing operator " + op_id);
    if (os->lambda_total <= 0) return 0.0;

    double p = 0.0;
    for (const auto& [type, lam] : os->lambda_by_type) {
        if (lam <= 0) continue;
        double per_event_us = 0.0;
        for (const auto& pat : op->patterns) {
            if (!pat.input_types().count(type)) continue;
            auto it = os->ptime_by_pattern_us.find(pat.id);
            double pt = it != os->ptime_by_pattern_us.end() ? it->second : pat.ptime_us;
            per_event_us += config.ratio(pat.id, type) * pt;
        }
        p += (lam / os->lambda_total) * per_event_us * 1e-6;
    }
    return p;
}

bool is_feasible(const Topology& topo, const Snapshot& snap, const ShedderConfig& config,
                 const std::string& op_id, double bound_s) {
    const OperatorSnapshot* os = snap.find(op_id);
    if (!os) throw std::invalid_argument("snapshot missing operator " + op_id);
    double p = avg_ptime(topo, snap, config, op_id);
    double p_star = feasible_ptime(bound_s, os->lambda_total);
    if (p > p_star) return false;
    // Strict stability: lambda < 1/p. p == 0 means everything is shed.
    return p <= 0.0 || os->lambda_total < 1.0 / p;
}

} // namespace cepshed
