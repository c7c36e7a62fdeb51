#pragma once

#include <iosfwd>
#include <string>

#include "cepshed/core_model.hpp"

namespace cepshed {

/// Parses a pattern s-expression, e.g. "(seq (atom 0) (atom 0) (atom 1))".
/// Property atoms carry an attribute predicate: "(atom 2 stock \"IBM\")".
PatternAst parse_pattern_ast(const std::string& text);

/// Loads a topology from the sectioned config format:
///
///   [types]
///   0 = machine_a
///   [sources.s1]
///   emits = 0 1 2 3
///   rate.0 = 500
///   [operators.op1]
///   latency_bound_ms = 50
///   [operators.op1.patterns.Q11]
///   ast = (seq (atom 0) (atom 0) (atom 1))
///   window_ms = 2000
///   output_type = 4
///   f = 1
///   ptime_us = 100
///   [sinks.sink1]
///   weight = 1.0
///   [edges]
///   s1 -> op1 : 0 1 2 3
///
/// Property atoms are expanded into virtual types here, so every later
/// stage works on plain type ids.
Topology parse_topology(std::istream& in);
Topology load_topology(const std::string& path);

std::string to_config(const Topology& topo);

} // namespace cepshed
