#include <doctest.h>

#include "cepshed/core_model.hpp"
#include "cepshed/topology_io.hpp"
#include "helpers.hpp"

using namespace cepshed;

TEST_CASE("running example topology validates clean") {
    Topology topo = testing::running_example();
    auto violations = validate(topo);
    for (const auto& v : violations) INFO(v.code, ": ", v.detail);
    CHECK(violations.empty());
    CHECK(topo.operators.size() == 4);
    CHECK(topo.sources.size() == 2);
    CHECK(topo.sinks.size() == 2);
}

TEST_CASE("added back-edge is reported as a cycle") {
    Topology topo = testing::running_example();
    topo.edges.push_back({"op3", "op2", {8}});
    // keep the edge well-typed so only the cycle trips
    auto violations = validate(topo);
    bool cycle = false;
    for (const auto& v : violations) cycle = cycle || v.code == "cycle";
    CHECK(cycle);
}

TEST_CASE("undeclared atom type is reported") {
    Topology topo = testing::running_example();
    topo.operators[0].patterns[0].ast.children[2].atom_type = 77;
    auto violations = validate(topo);
    bool unknown = false;
    for (const auto& v : violations) unknown = unknown || v.code == "unknown-type";
    CHECK(unknown);
}

TEST_CASE("structural invariants are caught") {
    Topology topo = testing::running_example();
    SUBCASE("bad window") {
        topo.operators[0].patterns[0].window_ms = 0;
        bool hit = false;
        for (const auto& v : validate(topo)) hit = hit || v.code == "bad-window";
        CHECK(hit);
    }
    SUBCASE("duplicate pattern id") {
        topo.operators[0].patterns[1].id = "Q11";
        bool hit = false;
        for (const auto& v : validate(topo)) hit = hit || v.code == "dup-pattern-id";
        CHECK(hit);
    }
    SUBCASE("unproduced type") {
        topo.types.push_back({42, "orphan"});
        bool hit = false;
        for (const auto& v : validate(topo)) hit = hit || v.code == "type-unproduced";
        CHECK(hit);
    }
    SUBCASE("edge carrying a type the producer cannot emit") {
        topo.edges.push_back({"op1", "op3", {6}});
        bool hit = false;
        for (const auto& v : validate(topo)) hit = hit || v.code == "edge-type-not-producible";
        CHECK(hit);
    }
}

TEST_CASE("successors of a pattern") {
    Topology topo = testing::running_example();
    CHECK(successors(topo, "Q21") == std::set<std::string>{"op3"});
    CHECK(successors(topo, "Q31") == std::set<std::string>{"sink1"});
    CHECK_THROWS_AS(successors(topo, "nope"), std::invalid_argument);

    // Pattern whose output nobody consumes.
    Topology t2 = topo;
    t2.types.push_back({10, "t10"});
    t2.operators[1].patterns[1].output_type = 10;
    t2.edges[5].types = {10};  // keep the edge well-typed but reroute
    CHECK(successors(t2, "Q22") == std::set<std::string>{"op4"});
    t2.edges[5].types = {};
    CHECK(successors(t2, "Q22").empty());
}

TEST_CASE("transitive successors") {
    Topology topo = testing::running_example();
    CHECK(transitive_successors(topo, "op2") == std::set<std::string>{"op3", "op4"});
    CHECK(transitive_successors(topo, "op1") == std::set<std::string>{"op3", "op4"});
    CHECK(transitive_successors(topo, "op3").empty());
    CHECK_THROWS_AS(transitive_successors(topo, "nope"), std::invalid_argument);
}

TEST_CASE("successor queries agree with a DFS over the edge set") {
    Topology topo = testing::running_example();
    // Independent reachability: repeated edge relaxation.
    for (const auto& op : topo.operators) {
        std::set<std::string> reach;
        std::vector<std::string> stack = {op.id};
        while (!stack.empty()) {
            std::string cur = stack.back();
            stack.pop_back();
            for (const auto& e : topo.edges) {
                if (e.from != cur || !topo.find_operator(e.to)) continue;
                if (reach.insert(e.to).second) stack.push_back(e.to);
            }
        }
        reach.erase(op.id);
        CHECK(transitive_successors(topo, op.id) == reach);
    }
    CHECK_FALSE(topological_order(topo).empty());
}

TEST_CASE("topology round-trips through the config text") {
    Topology topo = testing::running_example();
    std::string text = to_config(topo);
    std::istringstream in(text);
    Topology again = parse_topology(in);
    CHECK(validate(again).empty());
    CHECK(again.operators.size() == topo.operators.size());
    CHECK(again.find_pattern("Q21")->output_type == 6);
    CHECK(again.find_pattern("Q21")->input_types() == std::set<TypeId>{0, 1});
}

TEST_CASE("pattern ast parser") {
    PatternAst ast = parse_pattern_ast("(seq (atom 0) (atom 0) (atom 1))");
    CHECK(ast.kind == PatternAst::Kind::Seq);
    CHECK(ast.children.size() == 3);
    CHECK(ast.children[0].atom_type == 0);

    CHECK_THROWS_AS(parse_pattern_ast("(seq (atom 0)"), ParseError);
    CHECK_THROWS_AS(parse_pattern_ast("(frob (atom 0) (atom 1))"), ParseError);
}

TEST_CASE("closed-set property atoms expand into virtual types") {
    std::string cfg = R"([types]
0 = stockA
1 = stockB
2 = out

[sources.s1]
emits = 0 1

[operators.op1]
[operators.op1.patterns.P1]
ast = (and (atom 0 stock "IBM") (atom 1 stock "Apple"))
window_ms = 1000
output_type = 2
ptime_us = 10

[sinks.k]
weight = 1

[edges]
s1 -> op1 : 0 1
op1 -> k : 2
)";
    std::istringstream in(cfg);
    Topology topo = parse_topology(in);
    REQUIRE(topo.virtual_types.size() == 2);
    CHECK(validate(topo).empty());

    // Classification rewrites matching events to the virtual type.
    Event e;
    e.type = 0;
    e.attrs = {{"stock", std::string("IBM")}};
    CHECK(topo.classify(e) == topo.virtual_types[0].virtual_type);
    e.attrs = {{"stock", std::string("MSFT")}};
    CHECK(topo.classify(e) == 0);

    // The pattern itself now references plain types only.
    const PatternSpec* p = topo.find_pattern("P1");
    for (TypeId t : p->input_types()) CHECK(t >= 3);
}
