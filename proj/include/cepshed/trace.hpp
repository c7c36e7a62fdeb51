#pragma once

#include <map>
#include <string>
#include <vector>

#include "cepshed/core_model.hpp"

namespace cepshed {

/// Result of replaying measurement CSV files into per-source event streams.
/// Machine ids map to event types through a stable hash (FNV-1a mod 4), and
/// the realized mapping is persisted next to each run so results stay
/// interpretable.
struct TraceEvents {
    std::vector<std::vector<Event>> per_source;   // sorted by timestamp
    std::map<std::string, TypeId> type_mapping;   // machine id -> type
    std::size_t accepted = 0;
    std::size_t skipped = 0;

    std::string mapping_json() const;
};

/// Reads CSV files with at least (timestamp, machine_id, value) columns; a
/// non-numeric first row is treated as a header. Files are sorted and dealt
/// round-robin across the sources, each source's events sorted by time and
/// shifted so the earliest event lands at t=0. Malformed rows are skipped
/// and counted; an empty file set or zero accepted rows is an error.
TraceEvents ingest_trace(const std::vector<std::string>& paths, std::size_t n_sources,
                         double time_scale = 1.0, int type_modulus = 4);

} // namespace cepshed
