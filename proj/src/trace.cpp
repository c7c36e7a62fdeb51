#include "cepshed/trace.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace cepshed {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r')
            cur += c;
    }
    out.push_back(cur);
    return out;
}

bool to_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}

} // namespace

std::string TraceEvents::mapping_json() const {
    nlohmann::ordered_json j;
    for (const auto& [machine, type] : type_mapping) j[machine] = type;
    return j.dump(2);
}

TraceEvents ingest_trace(const std::vector<std::string>& paths, std::size_t n_sources,
                         double time_scale, int type_modulus) {
    if (paths.empty()) throw ParseError("trace ingestion needs at least one file");
    if (n_sources == 0) throw std::invalid_argument("trace ingestion needs at least one source");

    std::vector<std::string> sorted_paths = paths;
    std::sort(sorted_paths.begin(), sorted_paths.end());

    TraceEvents out;
    out.per_source.resize(n_sources);
    std::uint64_t next_id = 1;

    for (std::size_t fi = 0; fi < sorted_paths.size(); fi++) {
        std::ifstream in(sorted_paths[fi]);
        if (!in) throw ParseError("cannot open trace file: " + sorted_paths[fi]);
        std::size_t source = fi % n_sources;

        std::string line;
        int col_ts = 0, col_machine = 1, col_value = 2;
        bool first = true;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto cells = split_csv(line);
            if (first) {
                first = false;
                double probe;
                if (!cells.empty() && !to_double(cells[0], probe)) {
                    // Header row: locate the columns by name.
                    for (std::size_t c = 0; c < cells.size(); c++) {
                        if (cells[c] == "timestamp" || cells[c] == "time") col_ts = (int)c;
                        if (cells[c] == "machine_id" || cells[c] == "machine") col_machine = (int)c;
                        if (cells[c] == "value") col_value = (int)c;
                    }
                    continue;
                }
            }
            if ((int)cells.size() <= std::max({col_ts, col_machine, col_value})) {
                out.skipped++;
                continue;
            }
            double ts, value;
            const std::string& machine = cells[col_machine];
            if (!to_double(cells[col_ts], ts) || !to_double(cells[col_value], value) ||
                machine.empty()) {
                out.skipped++;
                continue;
            }

            auto mit = out.type_mapping.find(machine);
            TypeId type;
            if (mit == out.type_mapping.end()) {
                type = static_cast<TypeId>(fnv1a(machine) % type_modulus);
                out.type_mapping[machine] = type;
            } else {
                type = mit->second;
            }

            Event e;
            e.type = type;
            e.ts_ms = ts * time_scale;
            e.id = next_id++;
            e.attrs = {{"machine_id", machine}, {"value", value}};
            out.per_source[source].push_back(std::move(e));
            out.accepted++;
        }
    }

    if (out.accepted == 0) throw ParseError("trace files contained no usable rows");

    double t0 = std::numeric_limits<double>::infinity();
    for (auto& stream : out.per_source) {
        std::stable_sort(stream.begin(), stream.end(),
                         [](const Event& a, const Event& b) { return a.ts_ms < b.ts_ms; });
        if (!stream.empty()) t0 = std::min(t0, stream.front().ts_ms);
    }
    for (auto& stream : out.per_source)
        for (auto& e : stream) e.ts_ms -= t0;

    return out;
}

} // namespace cepshed
