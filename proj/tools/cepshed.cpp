#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "cepshed/bench.hpp"
#include "cepshed/engine.hpp"
#include "cepshed/experiment.hpp"
#include "cepshed/oracle.hpp"
#include "cepshed/topology_io.hpp"
#include "cepshed/trace.hpp"
#include "cepshed/workload.hpp"

namespace fs = std::filesystem;
using namespace cepshed;

namespace {

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

int cmd_validate(const std::string& topology_path) {
    Topology topo = load_topology(topology_path);
    auto violations = validate(topo);
    if (violations.empty()) {
        std::cout << "ok: " << topo.operators.size() << " operators, " << topo.sources.size()
                  << " sources, " << topo.sinks.size() << " sinks, " << topo.types.size()
                  << " types\n";
        return 0;
    }
    for (const auto& v : violations) std::cout << v.code << ": " << v.detail << "\n";
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributed CEP load-shedding simulator and planner"};
    app.require_subcommand(1);

    std::string topology_path, workload_path, out_dir = "out", config_json, strategy = "global";
    std::string bottleneck;
    std::uint64_t seed = 0;
    double duration_ms = 0;
    double ptime_band = 0.10, update_threshold = 0.05;
    int monitor_window = 1000;
    double channel_delay_ms = 0.0;
    bool lp_debug = false;

    auto* validate_cmd = app.add_subcommand("validate", "Check a topology file");
    validate_cmd->add_option("--topology", topology_path, "topology config")->required();

    auto* simulate_cmd = app.add_subcommand("simulate", "Run the simulator with a fixed config");
    simulate_cmd->add_option("--topology", topology_path)->required();
    simulate_cmd->add_option("--workload", workload_path)->required();
    simulate_cmd->add_option("--config", config_json, "shedder config JSON file (optional)");
    simulate_cmd->add_option("--bottleneck", bottleneck, "operator the config applies to");
    simulate_cmd->add_option("--seed", seed);
    simulate_cmd->add_option("--duration-ms", duration_ms);
    simulate_cmd->add_option("--channel-delay-ms", channel_delay_ms);
    simulate_cmd->add_option("--out", out_dir);

    auto* experiment_cmd = app.add_subcommand("experiment", "Oracle + shedded run with metrics");
    experiment_cmd->add_option("--topology", topology_path)->required();
    experiment_cmd->add_option("--workload", workload_path)->required();
    experiment_cmd->add_option("--strategy", strategy, "none|local|global");
    experiment_cmd->add_option("--bottleneck", bottleneck);
    experiment_cmd->add_option("--seed", seed);
    experiment_cmd->add_option("--duration-ms", duration_ms);
    experiment_cmd->add_option("--ptime-band", ptime_band);
    experiment_cmd->add_option("--update-threshold", update_threshold);
    experiment_cmd->add_option("--monitor-window", monitor_window);
    experiment_cmd->add_option("--channel-delay-ms", channel_delay_ms);
    experiment_cmd->add_flag("--lp-debug", lp_debug, "dump the chosen LP in text form");
    experiment_cmd->add_option("--out", out_dir);

    int bench_types = 100, bench_queries = 10, bench_reps = 3;
    std::vector<double> bench_shares = {1.0};
    auto* bench_cmd = app.add_subcommand("bench-lp", "Time the solver on synthetic programs");
    bench_cmd->add_option("--types", bench_types);
    bench_cmd->add_option("--queries", bench_queries);
    bench_cmd->add_option("--share", bench_shares, "one or more query-per-type shares");
    bench_cmd->add_option("--reps", bench_reps);
    bench_cmd->add_option("--seed", seed);
    bench_cmd->add_option("--out", out_dir);

    double grid_step = 0.02;
    auto* oracle_cmd =
        app.add_subcommand("oracle-grid", "Grid-search the model for the optimal ratios");
    oracle_cmd->add_option("--topology", topology_path)->required();
    oracle_cmd->add_option("--workload", workload_path)->required();
    oracle_cmd->add_option("--bottleneck", bottleneck);
    oracle_cmd->add_option("--strategy", strategy, "local|global objective");
    oracle_cmd->add_option("--step", grid_step);

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate_cmd->parsed()) return cmd_validate(topology_path);

        if (simulate_cmd->parsed()) {
            Topology topo = load_topology(topology_path);
            WorkloadSpec wl = WorkloadSpec::load(workload_path);
            if (seed) wl.seed = seed;
            if (duration_ms > 0) wl.duration_ms = duration_ms;
            std::map<std::string, ShedderConfig> configs;
            if (!config_json.empty()) {
                std::ifstream in(config_json);
                std::string text((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
                std::string op = resolve_bottleneck(topo, bottleneck);
                configs[op] = ShedderConfig::from_json(text);
            }
            SimOptions opts;
            opts.channel_delay_ms = channel_delay_ms;
            SimulationReport rep =
                run_simulation(topo, wl, configs, wl.duration_ms, wl.seed, opts);
            write_file(fs::path(out_dir) / "report.json", rep.to_json());
            write_file(fs::path(out_dir) / "timeseries.csv", rep.series_csv());
            std::cout << "sink arrivals: " << rep.total_sink_count() << "\n";
            return 0;
        }

        if (experiment_cmd->parsed()) {
            Topology topo = load_topology(topology_path);
            WorkloadSpec wl = WorkloadSpec::load(workload_path);
            ExperimentOptions opts;
            opts.strategy = strategy_from_string(strategy);
            opts.bottleneck = bottleneck;
            opts.ptime_band = ptime_band;
            opts.update_threshold = update_threshold;
            opts.monitor_window = monitor_window;
            opts.channel_delay_ms = channel_delay_ms;
            opts.dump_lp = lp_debug;
            if (seed) opts.seed = seed;
            if (duration_ms > 0) opts.duration_ms = duration_ms;

            ExperimentReport rep = run_experiment(topo, wl, opts);
            write_file(fs::path(out_dir) / "report.json", rep.to_json());
            write_file(fs::path(out_dir) / "timeseries.csv", rep.run.series_csv());
            write_file(fs::path(out_dir) / "controller_log.jsonl", rep.controller_log());
            if (lp_debug) {
                for (const auto& d : rep.decisions)
                    if (!d.lp_text.empty()) {
                        write_file(fs::path(out_dir) / "lp_debug.lp", d.lp_text);
                        break;
                    }
            }
            if (wl.is_trace()) {
                TraceEvents tr = ingest_trace(wl.trace_paths, topo.sources.size(),
                                              wl.trace_time_scale);
                write_file(fs::path(out_dir) / "mapping.json", tr.mapping_json());
            }
            std::cout << "strategy=" << rep.strategy << " recall=" << rep.recall
                      << " deviation_s=" << rep.deviation_seconds
                      << " in_band=" << rep.in_band_fraction << "\n";
            return 0;
        }

        if (bench_cmd->parsed()) {
            std::vector<BenchPoint> points;
            for (double share : bench_shares) {
                BenchPoint p = bench_lp(bench_types, bench_queries, share, bench_reps,
                                        seed ? seed : 7);
                std::cout << "types=" << p.types << " queries=" << p.queries
                          << " share=" << p.share << " -> " << p.wall_ms << " ms ("
                          << p.iterations << " iterations)\n";
                points.push_back(p);
            }
            write_file(fs::path(out_dir) / "bench_lp.csv", bench_csv(points));
            return 0;
        }

        if (oracle_cmd->parsed()) {
            Topology topo = load_topology(topology_path);
            WorkloadSpec wl = WorkloadSpec::load(workload_path);
            std::string op = resolve_bottleneck(topo, bottleneck);
            Snapshot snap = model_snapshot(topo, wl.source_rates);
            const OperatorSpec* bop = topo.find_operator(op);
            if (!bop->latency_bound_ms)
                throw std::runtime_error("bottleneck has no latency bound");
            double p_star =
                feasible_ptime(*bop->latency_bound_ms * 1e-3, snap.find(op)->lambda_total);

            oracle::Instance inst{&topo, &snap, op, p_star,
                                  strategy == "local" ? PlanObjective::Local
                                                      : PlanObjective::Global};
            auto res = oracle::grid_search(inst, grid_step);
            PlanResult lp_res = plan(topo, snap, op, p_star, inst.objective);
            std::cout << "grid best objective: " << res.objective << " (" << res.evaluated
                      << " points)\n";
            std::cout << "lp objective:        " << lp_res.objective << " ("
                      << lp::status_name(lp_res.status) << ")\n";
            std::cout << "grid config: " << res.best.to_json() << "\n";
            std::cout << "lp config:   " << lp_res.config.to_json() << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
