#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "mimopc/experiment.hpp"

namespace {

using namespace mimopc;

Precoder parse_precoder(const std::string &name) {
    if (name == "zf") return Precoder::ZF;
    if (name == "mr") return Precoder::MR;
    throw CLI::ValidationError("--precoder", "expected zf or mr");
}

DropConfig read_drop_config(const std::string &path) {
    if (path.empty()) return DropConfig{};
    std::ifstream in(path);
    if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
    return load_drop_config(in);
}

NetworkScenario read_scenario(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw CLI::ValidationError("--scenario", "cannot open " + path);
    return load_scenario(in);
}

template <typename Fn> void write_file(const std::string &path, Fn &&fn) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    fn(out);
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Downlink power control for multi-cell networks: centralized and "
                 "coordinated per-cell solvers, drop simulation, and closed-form "
                 "validation."};
    app.require_subcommand(1);

    std::string config_path, scenario_path, out_path = "scenario.txt", out_dir = ".";
    std::string mode = "centralized", precoder_name = "zf", experiment_mode;
    std::uint64_t seed = 1;
    int num_drops = 200, max_iterations = 400, mc_realizations = 10000, threads = 0;
    double benchmark_fraction = 0.95;

    auto *gen = app.add_subcommand("generate", "Draw a random user placement and write the "
                                               "network scenario to a file");
    gen->add_option("--config", config_path, "drop settings as flat key = value text");
    gen->add_option("--seed", seed, "placement seed");
    gen->add_option("--output", out_path, "scenario file to write");

    auto *solve = app.add_subcommand("solve", "Solve the power minimization on one scenario");
    solve->add_option("--scenario", scenario_path, "scenario file produced by generate")
        ->required();
    solve->add_option("--mode", mode, "centralized | basic | dual")
        ->check(CLI::IsMember({"centralized", "basic", "dual"}));
    solve->add_option("--precoder", precoder_name, "zf | mr");
    solve->add_option("--output", out_path, "CSV file for the power allocation");
    solve->add_option("--max-iterations", max_iterations, "coordination rounds cap (dual)");
    std::string trace_path;
    solve->add_option("--trace", trace_path, "per-iteration trace CSV (dual)");
    bool diminishing_step = false;
    solve->add_flag("--diminishing-step", diminishing_step,
                    "damp the price step as 1/sqrt(n) (dual; helps large networks)");

    auto *exp = app.add_subcommand("experiment", "Run a multi-drop study and write CSV outputs");
    exp->add_option("--mode", experiment_mode,
                    "convergence-histogram | qos-cdf | signaling-table | validate-lemma1")
        ->required();
    exp->add_option("--config", config_path, "drop settings as flat key = value text");
    exp->add_option("--drops", num_drops, "number of user placements");
    exp->add_option("--seed", seed, "master seed");
    exp->add_option("--precoder", precoder_name, "zf | mr");
    exp->add_option("--max-iterations", max_iterations, "coordination rounds cap");
    exp->add_option("--benchmark-fraction", benchmark_fraction,
                    "fraction of the centralized optimum that counts as converged");
    exp->add_option("--realizations", mc_realizations, "channel draws for validate-lemma1");
    exp->add_option("--threads", threads, "worker threads (0: all cores)");
    exp->add_option("--out-dir", out_dir, "directory for the CSV outputs");

    auto *val = app.add_subcommand("validate", "Check the closed-form rate expressions on one "
                                               "scenario by channel simulation");
    val->add_option("--scenario", scenario_path, "scenario file produced by generate")
        ->required();
    val->add_option("--precoder", precoder_name, "zf | mr");
    val->add_option("--realizations", mc_realizations, "channel draws");
    val->add_option("--seed", seed, "simulation seed");
    val->add_option("--out-dir", out_dir, "directory for the CSV outputs");

    CLI11_PARSE(app, argc, argv);

    try {
        const Precoder scheme = parse_precoder(precoder_name);

        if (gen->parsed()) {
            const DropConfig cfg = read_drop_config(config_path);
            const NetworkScenario sc = generate_drop(cfg, seed);
            write_file(out_path, [&](std::ostream &out) { save_scenario(sc, out); });
            std::cout << "wrote " << out_path << " (" << sc.cells() << " cells, " << sc.users()
                      << " users per cell)\n";
        } else if (solve->parsed()) {
            const NetworkScenario sc = read_scenario(scenario_path);
            if (mode == "dual") {
                DualDecompositionSettings set;
                set.max_iterations = max_iterations;
                set.diminishing_step = diminishing_step;
                const DualDecompositionResult res = run_dual_decomposition(sc, scheme, set);
                std::cout << "status " << to_string(res.status) << ", iterations "
                          << res.iterations << ", total power " << res.total_power << " W\n";
                if (res.converged()) {
                    PowerControlResult as_central;
                    as_central.status = res.status;
                    as_central.powers = res.powers;
                    as_central.sinr = res.sinr;
                    as_central.se = res.se;
                    as_central.total_power = res.total_power;
                    write_file(out_path,
                               [&](std::ostream &out) { export_power_csv(as_central, out); });
                    std::cout << "wrote " << out_path << "\n";
                }
                if (!trace_path.empty())
                    write_file(trace_path,
                               [&](std::ostream &out) { export_trace_csv(res, out); });
            } else {
                // centralized and basic compute the identical allocation; they
                // differ only in where the program runs and what crosses the
                // backhaul, which the signaling table accounts for.
                const PowerControlResult res = solve_centralized(sc, scheme);
                std::cout << "status " << to_string(res.status) << ", total power "
                          << res.total_power << " W\n";
                if (res.feasible())
                    write_file(out_path, [&](std::ostream &out) { export_power_csv(res, out); });
                if (res.feasible()) std::cout << "wrote " << out_path << "\n";
            }
        } else if (exp->parsed()) {
            ExperimentConfig cfg;
            cfg.drop = read_drop_config(config_path);
            cfg.num_drops = num_drops;
            cfg.master_seed = seed;
            cfg.scheme = scheme;
            cfg.benchmark_fraction = benchmark_fraction;
            cfg.max_iterations = max_iterations;
            cfg.mc_realizations = mc_realizations;
            cfg.threads = threads;
            std::filesystem::create_directories(out_dir);
            run_experiment(cfg, parse_experiment_mode(experiment_mode), out_dir);
            std::cout << "experiment " << experiment_mode << " finished, outputs in " << out_dir
                      << "\n";
        } else if (val->parsed()) {
            const NetworkScenario sc = read_scenario(scenario_path);
            const PowerControlResult central = solve_centralized(sc, scheme);
            const PowerAllocation rho =
                central.feasible() ? central.powers
                                   : PowerAllocation{Eigen::MatrixXd::Constant(
                                         sc.cells(), sc.users(), sc.p_max(0) / sc.users())};
            const MonteCarloReport rep = validate_closed_form(
                sc.noise_normalized(), rho, scheme, mc_realizations, seed);
            std::filesystem::create_directories(out_dir);
            write_file(out_dir + "/validation_users.csv",
                       [&](std::ostream &out) { export_validation_csv(rep, out); });
            write_file(out_dir + "/validation_terms.csv",
                       [&](std::ostream &out) { export_term_csv(rep, out); });
            std::cout << "worst relative deviation " << rep.max_rel_error
                      << ", worst term z-score " << rep.max_abs_z << "\n";
        }
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
