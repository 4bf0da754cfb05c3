// qsed: scenario sampling, two-stage dispatch solves, backend comparison and
// robustness runs over a case file.

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "qsed/io.hpp"

namespace {

struct Flags {
    std::string case_path;
    std::string weights = "exact";
    std::size_t shots = 512;
    std::uint64_t seed = 0;
    std::string master = "ilp-oracle";
    std::string reference = "ilp-oracle";
    std::string selection = "greedy";
    std::string termination = "gap";
    double epsilon = 1e-6;
    std::size_t max_iterations = 50;
    double resolution_floor = 0.25;
    int depth = 3;
    int restarts = 8;
    int qubit_cap = 20;
    std::uint64_t qaoa_seed = 0;
    int anneal_sweeps = 2000;
    std::uint64_t anneal_seed = 0;
    unsigned threads = 0;
    std::string output_dir = ".";
    double tolerance = 1e-6;
    std::size_t trials = 10;
};

void add_common(CLI::App *cmd, Flags &f, bool solver) {
    cmd->add_option("case", f.case_path, "case file (qsed-case/1 JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--weights", f.weights, "scenario weights")->check(CLI::IsMember({"exact", "sampled"}));
    cmd->add_option("--shots", f.shots, "measurements per RES register in sampled mode");
    cmd->add_option("--seed", f.seed, "scenario sampling seed");
    cmd->add_option("-o,--output-dir", f.output_dir, "output directory (QSED_OUTPUT_DIR overrides)");
    if (!solver) {
        return;
    }
    cmd->add_option("--master", f.master, "master backend")
        ->check(CLI::IsMember({"ilp-oracle", "qubo-exact", "qubo-qaoa", "qubo-anneal"}));
    cmd->add_option("--selection", f.selection, "feasibility-cut selection backend")
        ->check(CLI::IsMember({"none", "greedy", "qubo-exact", "qubo-qaoa"}));
    cmd->add_option("--termination", f.termination, "stopping rule")->check(CLI::IsMember({"gap", "no-new-cuts"}));
    cmd->add_option("--epsilon", f.epsilon, "relative gap tolerance");
    cmd->add_option("--max-iterations", f.max_iterations, "iteration cap");
    cmd->add_option("--resolution-floor", f.resolution_floor, "coarsest QUBO coefficient resolution");
    cmd->add_option("--qaoa-depth", f.depth, "QAOA layers");
    cmd->add_option("--qaoa-restarts", f.restarts, "QAOA optimizer restarts");
    cmd->add_option("--qubit-cap", f.qubit_cap, "largest QUBO simulated with QAOA");
    cmd->add_option("--qaoa-seed", f.qaoa_seed, "QAOA seed");
    cmd->add_option("--anneal-sweeps", f.anneal_sweeps, "annealing sweeps per restart");
    cmd->add_option("--anneal-seed", f.anneal_seed, "annealing seed");
    cmd->add_option("--threads", f.threads, "worker threads (0: hardware concurrency)");
}

qsed::io::RunConfig to_config(const Flags &f) {
    using namespace qsed;
    io::RunConfig cfg;
    cfg.case_path = f.case_path;
    cfg.scenarios.kind = f.weights == "sampled" ? uqae::WeightMode::Sampled : uqae::WeightMode::Exact;
    cfg.scenarios.shots = f.shots;
    cfg.scenarios.seed = f.seed;
    cfg.benders.master = benders::master_from_string(f.master);
    cfg.benders.selection = cutsel::backend_from_string(f.selection);
    cfg.benders.termination = f.termination == "gap" ? benders::Termination::Gap : benders::Termination::NoNewCuts;
    cfg.benders.epsilon = f.epsilon;
    cfg.benders.max_iterations = f.max_iterations;
    cfg.benders.widths.resolution_floor = f.resolution_floor;
    cfg.benders.qaoa.depth = f.depth;
    cfg.benders.qaoa.restarts = f.restarts;
    cfg.benders.qaoa.qubit_cap = f.qubit_cap;
    cfg.benders.qaoa.seed = f.qaoa_seed;
    cfg.benders.anneal.sweeps = f.anneal_sweeps;
    cfg.benders.anneal.seed = f.anneal_seed;
    cfg.benders.threads = f.threads;
    cfg.output_dir = f.output_dir;
    cfg.reference = benders::master_from_string(f.reference);
    cfg.compare_tolerance = f.tolerance;
    cfg.trials = f.trials;
    return cfg;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Two-stage stochastic dispatch with quantum-assisted Benders decomposition"};
    app.require_subcommand(1);
    Flags f;

    auto *sample = app.add_subcommand("sample", "generate scenarios; writes scenarios.csv and histogram.csv");
    add_common(sample, f, false);
    auto *solve = app.add_subcommand("solve", "run Benders; writes trace.csv, schedule.csv and schedule.txt");
    add_common(solve, f, true);
    auto *compare = app.add_subcommand("compare", "run two master backends; writes compare.csv");
    add_common(compare, f, true);
    compare->add_option("--reference", f.reference, "reference master backend")
        ->check(CLI::IsMember({"ilp-oracle", "qubo-exact", "qubo-qaoa", "qubo-anneal"}));
    compare->add_option("--tolerance", f.tolerance, "accepted objective difference");
    auto *robust = app.add_subcommand("robustness", "seeded repeated runs; writes robustness.csv");
    add_common(robust, f, true);
    robust->add_option("--trials", f.trials, "number of runs");

    CLI11_PARSE(app, argc, argv);

    qsed::io::RunConfig cfg;
    try {
        cfg = to_config(f);
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    if (sample->parsed()) {
        return qsed::io::cmd_sample(cfg, std::cout);
    }
    if (solve->parsed()) {
        return qsed::io::cmd_solve(cfg, std::cout);
    }
    if (compare->parsed()) {
        return qsed::io::cmd_compare(cfg, std::cout);
    }
    return qsed::io::cmd_robustness(cfg, std::cout);
}
