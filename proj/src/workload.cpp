#include "cepshed/workload.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace cepshed {

std::string WorkloadSpec::to_json() const {
    nlohmann::ordered_json j;
    j["mode"] = mode;
    j["arrival"] = arrival == ArrivalProcess::Poisson ? "poisson" : "constant";
    j["duration_ms"] = duration_ms;
    j["seed"] = seed;
    nlohmann::ordered_json srcs;
    for (const auto& [sid, rates] : source_rates) {
        nlohmann::ordered_json r;
        for (const auto& [t, v] : rates) r[std::to_string(t)] = v;
        srcs[sid] = r;
    }
    j["sources"] = srcs;
    if (!steps.empty()) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& s : steps) {
            nlohmann::ordered_json e;
            e["t_ms"] = s.t_ms;
            e["scale"] = s.scale;
            if (!s.source.empty()) e["source"] = s.source;
            arr.push_back(e);
        }
        j["steps"] = arr;
    }
    if (!trace_paths.empty()) {
        j["trace"]["paths"] = trace_paths;
        j["trace"]["time_scale"] = trace_time_scale;
    }
    return j.dump(2);
}

WorkloadSpec WorkloadSpec::from_json(const std::string& text) {
    WorkloadSpec w;
    auto j = nlohmann::json::parse(text);
    w.mode = j.value("mode", w.mode);
    std::string arr = j.value("arrival", "poisson");
    if (arr == "poisson")
        w.arrival = ArrivalProcess::Poisson;
    else if (arr == "constant")
        w.arrival = ArrivalProcess::Constant;
    else
        throw ParseError("unknown arrival process: " + arr);
    w.duration_ms = j.value("duration_ms", w.duration_ms);
    w.seed = j.value("seed", w.seed);
    if (j.contains("sources"))
        for (const auto& [sid, rates] : j.at("sources").items())
            for (const auto& [t, v] : rates.items())
                w.source_rates[sid][std::stoi(t)] = v.get<double>();
    if (j.contains("steps"))
        for (const auto& e : j.at("steps"))
            w.steps.push_back({e.at("t_ms").get<double>(), e.at("scale").get<double>(),
                               e.value("source", std::string())});
    if (j.contains("trace")) {
        w.trace_paths = j.at("trace").at("paths").get<std::vector<std::string>>();
        w.trace_time_scale = j.at("trace").value("time_scale", 1.0);
    }
    return w;
}

WorkloadSpec WorkloadSpec::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open workload file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

std::vector<std::string> WorkloadSpec::check() const {
    std::vector<std::string> out;
    if (duration_ms <= 0) out.push_back("duration_ms must be positive");
    for (const auto& [sid, rates] : source_rates)
        for (const auto& [t, v] : rates)
            if (v < 0)
                out.push_back("negative rate for source " + sid + " type " + std::to_string(t));
    for (const auto& s : steps)
        if (s.scale < 0) out.push_back("negative step scale");
    if (is_trace() && trace_paths.empty()) out.push_back("trace mode without trace paths");
    return out;
}

} // namespace cepshed
