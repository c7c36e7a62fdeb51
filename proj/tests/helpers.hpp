#pragma once

#include <sstream>
#include <string>

#include "cepshed/core_model.hpp"
#include "cepshed/topology_io.hpp"

namespace cepshed::testing {

/// The four-operator / two-source / two-sink topology used throughout:
/// op1, op2 each run Seq(0;0;1) and And(1,2,3); op3 joins the Seq outputs,
/// op4 the And outputs. Processing costs and the op2 latency bound are
/// parameters so tests can dial the overload.
inline Topology running_example(double op2_pt1_us = 500, double op2_pt2_us = 500,
                                double op2_bound_ms = 2.0, double window_ms = 2000) {
    std::ostringstream cfg;
    cfg << "[types]\n";
    for (int t = 0; t <= 9; t++) cfg << t << " = t" << t << "\n";
    cfg << "[sources.s1]\nemits = 0 1 2 3\n";
    cfg << "[sources.s2]\nemits = 0 1 2 3\n";
    cfg << "[operators.op1]\n";
    cfg << "[operators.op1.patterns.Q11]\n"
        << "ast = (seq (atom 0) (atom 0) (atom 1))\nwindow_ms = " << window_ms
        << "\noutput_type = 4\nptime_us = 100\n";
    cfg << "[operators.op1.patterns.Q12]\n"
        << "ast = (and (atom 1) (atom 2) (atom 3))\nwindow_ms = " << window_ms
        << "\noutput_type = 5\nptime_us = 100\n";
    cfg << "[operators.op2]\nlatency_bound_ms = " << op2_bound_ms << "\n";
    cfg << "[operators.op2.patterns.Q21]\n"
        << "ast = (seq (atom 0) (atom 0) (atom 1))\nwindow_ms = " << window_ms
        << "\noutput_type = 6\nptime_us = " << op2_pt1_us << "\n";
    cfg << "[operators.op2.patterns.Q22]\n"
        << "ast = (and (atom 1) (atom 2) (atom 3))\nwindow_ms = " << window_ms
        << "\noutput_type = 7\nptime_us = " << op2_pt2_us << "\n";
    cfg << "[operators.op3]\n";
    cfg << "[operators.op3.patterns.Q31]\n"
        << "ast = (and (atom 4) (atom 6))\nwindow_ms = " << window_ms
        << "\noutput_type = 8\nptime_us = 50\n";
    cfg << "[operators.op4]\n";
    cfg << "[operators.op4.patterns.Q41]\n"
        << "ast = (and (atom 5) (atom 7))\nwindow_ms = " << window_ms
        << "\noutput_type = 9\nptime_us = 50\n";
    cfg << "[sinks.sink1]\nweight = 1.0\n[sinks.sink2]\nweight = 1.0\n";
    cfg << "[edges]\n"
        << "s1 -> op1 : 0 1 2 3\n"
        << "s2 -> op2 : 0 1 2 3\n"
        << "op1 -> op3 : 4\n"
        << "op1 -> op4 : 5\n"
        << "op2 -> op3 : 6\n"
        << "op2 -> op4 : 7\n"
        << "op3 -> sink1 : 8\n"
        << "op4 -> sink2 : 9\n";
    std::istringstream in(cfg.str());
    return parse_topology(in);
}

inline std::string data_path(const std::string& rel) {
    return std::string(CEPSHED_SOURCE_DIR) + "/" + rel;
}

} // namespace cepshed::testing
