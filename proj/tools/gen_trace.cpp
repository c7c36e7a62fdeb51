// Generates the bundled synthetic measurement trace: CSV rows of
// (timestamp, machine_id, value) mimicking per-machine CPU readings, so
// trace-driven runs and tests work without the external dataset.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "cepshed/common.hpp"

int main(int argc, char** argv) {
    std::string out_path = argc > 1 ? argv[1] : "data/synthetic_trace.csv";
    long rows = argc > 2 ? std::stol(argv[2]) : 50000;
    std::uint64_t seed = argc > 3 ? std::stoull(argv[3]) : 20240911;

    std::mt19937_64 rng = cepshed::seeded_rng(seed, "trace");
    std::vector<std::string> machines;
    for (int m = 0; m < 12; m++) machines.push_back("machine-" + std::to_string(1000 + 37 * m));
    std::vector<double> load(machines.size(), 0.4);

    std::ofstream out(out_path);
    if (!out) {
        std::cerr << "cannot write " << out_path << "\n";
        return 1;
    }
    out << "timestamp,machine_id,value\n";

    std::exponential_distribution<double> gap(1.2);  // ~1.2 readings per ms overall
    std::uniform_int_distribution<std::size_t> pick(0, machines.size() - 1);
    std::normal_distribution<double> drift(0.0, 0.02);

    double t = 0.0;
    char buf[128];
    for (long i = 0; i < rows; i++) {
        t += gap(rng);
        std::size_t m = pick(rng);
        load[m] = std::clamp(load[m] + drift(rng), 0.05, 0.98);
        std::snprintf(buf, sizeof(buf), "%.3f,%s,%.4f\n", t, machines[m].c_str(), load[m]);
        out << buf;
    }
    std::cout << "wrote " << rows << " rows to " << out_path << "\n";
    return 0;
}
