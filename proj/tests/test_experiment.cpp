#include <doctest.h>

#include "cepshed/experiment.hpp"
#include "cepshed/topology_io.hpp"
#include "helpers.hpp"

using namespace cepshed;

TEST_CASE("underloaded run without shedding keeps full recall") {
    Topology topo = testing::running_example(100, 100, 50.0);
    WorkloadSpec wl;
    wl.duration_ms = 10000;
    wl.seed = 5;
    wl.source_rates = {{"s1", {{0, 100}, {1, 60}, {2, 60}, {3, 60}}},
                       {"s2", {{0, 100}, {1, 60}, {2, 60}, {3, 60}}}};
    ExperimentOptions opts;
    opts.strategy = Strategy::None;
    ExperimentReport rep = run_experiment(topo, wl, opts);
    CHECK(rep.recall == doctest::Approx(1.0).epsilon(0.02));
    CHECK(rep.deviation_seconds == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("recall arithmetic") {
    SimulationReport shedded, oracle;
    shedded.sink_counts = {{"a", 30}, {"b", 20}};
    oracle.sink_counts = {{"a", 60}, {"b", 40}};
    bool warn = false;
    CHECK(compute_recall(shedded, oracle, &warn) == doctest::Approx(0.5));
    CHECK_FALSE(warn);
    oracle.sink_counts = {{"a", 0}, {"b", 0}};
    CHECK(compute_recall(shedded, oracle, &warn) == doctest::Approx(1.0));
    CHECK(warn);
}

TEST_CASE("shedding half the scarce type halves recall of an and-join") {
    std::string cfg = R"([types]
0 = a
1 = b
2 = out

[sources.s]
emits = 0 1

[operators.op]
latency_bound_ms = 1000
[operators.op.patterns.P]
ast = (and (atom 0) (atom 1))
window_ms = 2000
output_type = 2
ptime_us = 100

[sinks.k]
weight = 1

[edges]
s -> op : 0 1
op -> k : 2
)";
    std::istringstream in(cfg);
    Topology topo = parse_topology(in);
    WorkloadSpec wl;
    wl.duration_ms = 60000;
    wl.seed = 8;
    wl.source_rates = {{"s", {{0, 300}, {1, 100}}}};  // B scarce

    ShedderConfig half;
    half.set("P", 1, 0.5);
    SimulationReport shedded = run_simulation(topo, wl, {{"op", half}}, wl.duration_ms, wl.seed);
    SimOptions oracle_opts;
    oracle_opts.zero_service = true;
    SimulationReport oracle =
        run_simulation(topo, wl, {}, wl.duration_ms, wl.seed, oracle_opts);
    double recall = compute_recall(shedded, oracle);
    CHECK(recall > 0.45);
    CHECK(recall < 0.55);
}

TEST_CASE("experiment json is byte-stable across runs") {
    Topology topo = testing::running_example(900, 900, 2.0);
    WorkloadSpec wl;
    wl.duration_ms = 8000;
    wl.seed = 31;
    wl.source_rates = {{"s1", {{0, 500}, {1, 250}, {2, 250}, {3, 250}}},
                       {"s2", {{0, 500}, {1, 250}, {2, 250}, {3, 250}}}};
    ExperimentOptions opts;
    opts.strategy = Strategy::Global;
    ExperimentReport a = run_experiment(topo, wl, opts);
    ExperimentReport b = run_experiment(topo, wl, opts);
    CHECK(a.to_json() == b.to_json());
    CHECK(!a.controller_log().empty());
}

TEST_CASE("bottleneck resolution") {
    Topology topo = testing::running_example();
    CHECK(resolve_bottleneck(topo, "") == "op2");
    CHECK(resolve_bottleneck(topo, "op1") == "op1");
    CHECK_THROWS_AS(resolve_bottleneck(topo, "zzz"), std::invalid_argument);
    Topology unbounded = topo;
    unbounded.operators[1].latency_bound_ms.reset();
    CHECK_THROWS_AS(resolve_bottleneck(unbounded, ""), std::invalid_argument);
}
