#include <doctest.h>

#include "cepshed/selectivity.hpp"
#include "cepshed/shedding.hpp"
#include "helpers.hpp"

using namespace cepshed;

TEST_CASE("should_process honors the ratio and keeps streams aligned") {
    ShedderConfig cfg;
    cfg.set("P", 0, 1.0);
    cfg.set("P", 1, 0.0);
    cfg.set("P", 2, 0.5);
    auto rng = seeded_rng(7, "test");
    for (int i = 0; i < 1000; i++) CHECK(should_process(cfg, "P", 0, rng));
    for (int i = 0; i < 1000; i++) CHECK_FALSE(should_process(cfg, "P", 1, rng));

    int accepted = 0;
    for (int i = 0; i < 10000; i++) accepted += should_process(cfg, "P", 2, rng);
    // binomial 3-sigma bound around 0.5
    CHECK(accepted > 10000 * (0.5 - 0.02));
    CHECK(accepted < 10000 * (0.5 + 0.02));

    // missing entries default to processing
    CHECK(should_process(cfg, "other", 9, rng));

    // bit-exact reproducibility for a fixed seed
    auto a = seeded_rng(42, "x");
    auto b = seeded_rng(42, "x");
    for (int i = 0; i < 100; i++)
        CHECK(should_process(cfg, "P", 2, a) == should_process(cfg, "P", 2, b));
}

TEST_CASE("shedder config json round trip") {
    ShedderConfig cfg;
    cfg.set("Q21", 1, 0.73);
    cfg.set("Q22", 3, 0.0);
    std::string json = cfg.to_json();
    ShedderConfig back = ShedderConfig::from_json(json);
    CHECK(back.ratio("Q21", 1) == doctest::Approx(0.73));
    CHECK(back.ratio("Q22", 3) == doctest::Approx(0.0));
    CHECK(back.ratio("Q22", 2) == doctest::Approx(1.0));
    CHECK_THROWS(ShedderConfig().set("P", 0, 1.5));
}

TEST_CASE("sojourn time follows 1/(mu-lambda)") {
    CHECK(sojourn_time(0, 100) == doctest::Approx(0.01));
    CHECK(sojourn_time(50, 100) == doctest::Approx(0.02));
    CHECK_THROWS_AS(sojourn_time(100, 100), OverloadError);
    CHECK_THROWS_AS(sojourn_time(150, 100), OverloadError);
}

TEST_CASE("feasible ptime inverts the bound equation") {
    CHECK(feasible_ptime(0.1, 90) == doctest::Approx(0.01));
    CHECK(feasible_ptime(0.05, 180) == doctest::Approx(0.005));
    CHECK(feasible_ptime(0.25, 0) == doctest::Approx(0.25));  // empty system
    CHECK_THROWS_AS(feasible_ptime(0, 10), std::invalid_argument);

    // Back-substitution reproduces the bound to 1e-12 relative over the
    // operational domain (bounds 0.1ms..100ms, rates up to 5000/s). The
    // round trip conditions as (1 + B*lambda), so that product caps the
    // reachable precision.
    auto rng = seeded_rng(11, "feas");
    std::uniform_real_distribution<double> bound_dist(1e-4, 0.1);
    std::uniform_real_distribution<double> rate_dist(0.0, 5000.0);
    for (int i = 0; i < 1000; i++) {
        double bound = bound_dist(rng);
        double lambda = rate_dist(rng);
        double p_star = feasible_ptime(bound, lambda);
        double back = sojourn_time(lambda, 1.0 / p_star);
        CHECK(std::abs(back - bound) <= 1e-12 * bound);
    }
}

TEST_CASE("avg_ptime evaluates the shedding-weighted mean") {
    // Two types at equal rates, one pattern per type at 2 ms.
    std::string cfg = R"([types]
0 = a
1 = b
2 = oa
3 = ob

[sources.s]
emits = 0 1

[operators.op]
[operators.op.patterns.PA]
ast = (seq (atom 0) (atom 0))
window_ms = 1000
output_type = 2
ptime_us = 2000

[operators.op.patterns.PB]
ast = (seq (atom 1) (atom 1))
window_ms = 1000
output_type = 3
ptime_us = 2000

[sinks.k]
weight = 1

[edges]
s -> op : 0 1
op -> k : 2 3
)";
    std::istringstream in(cfg);
    Topology topo = parse_topology(in);
    REQUIRE(validate(topo).empty());

    Snapshot snap;
    OperatorSnapshot os;
    os.lambda_total = 200;
    os.lambda_by_type = {{0, 100}, {1, 100}};
    os.ptime_by_pattern_us = {{"PA", 2000}, {"PB", 2000}};
    snap.operators["op"] = os;

    ShedderConfig none;
    CHECK(avg_ptime(topo, snap, none, "op") == doctest::Approx(0.002));

    ShedderConfig half;
    half.set("PA", 0, 0.5);
    half.set("PB", 1, 0.5);
    CHECK(avg_ptime(topo, snap, half, "op") == doctest::Approx(0.001));

    ShedderConfig all;
    all.set("PA", 0, 0.0);
    all.set("PB", 1, 0.0);
    CHECK(avg_ptime(topo, snap, all, "op") == doctest::Approx(0.0));

    SUBCASE("no arrivals means zero by convention") {
        Snapshot empty = snap;
        empty.operators["op"].lambda_total = 0;
        CHECK(avg_ptime(topo, empty, none, "op") == doctest::Approx(0.0));
    }

    SUBCASE("linearity and monotonicity in each ratio") {
        auto rng = seeded_rng(3, "lin");
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int i = 0; i < 200; i++) {
            double a = u(rng), b = u(rng);
            ShedderConfig ca, cb, mid;
            ca.set("PA", 0, a);
            cb.set("PA", 0, b);
            mid.set("PA", 0, 0.5 * (a + b));
            double pa = avg_ptime(topo, snap, ca, "op");
            double pb = avg_ptime(topo, snap, cb, "op");
            double pm = avg_ptime(topo, snap, mid, "op");
            CHECK(pm == doctest::Approx(0.5 * (pa + pb)));  // linear in r
            if (a <= b) CHECK(pa <= pb + 1e-15);
        }
    }

    SUBCASE("feasibility combines the bound and stability") {
        // lambda 200/s, p 2ms -> lambda*p = 0.4, stable; B*=0.1 ->
        // p* = 1/(10+200) = 4.76ms >= 2ms.
        CHECK(is_feasible(topo, snap, none, "op", 0.1));
        // Tight bound forces shedding.
        CHECK_FALSE(is_feasible(topo, snap, none, "op", 0.002));
        ShedderConfig shed_all;
        shed_all.set("PA", 0, 0.0);
        shed_all.set("PB", 1, 0.0);
        CHECK(is_feasible(topo, snap, shed_all, "op", 0.002));

        Snapshot over = snap;
        over.operators["op"].lambda_total = 600;  // lambda p = 1.2 unstable
        over.operators["op"].lambda_by_type = {{0, 300}, {1, 300}};
        CHECK_FALSE(is_feasible(topo, over, none, "op", 10.0));
    }
}
