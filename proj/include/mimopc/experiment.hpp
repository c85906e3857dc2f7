#pragma once

#include <atomic>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include "mimopc/centralized.hpp"
#include "mimopc/drops.hpp"
#include "mimopc/dual_decomposition.hpp"
#include "mimopc/montecarlo.hpp"
#include "mimopc/signaling.hpp"

namespace mimopc {

struct ExperimentConfig {
    DropConfig drop;
    int num_drops = 200;
    std::uint64_t master_seed = 1;
    Precoder scheme = Precoder::ZF;
    /// Fraction of the centralized optimum at which a coordinated run counts
    /// as converged.
    double benchmark_fraction = 0.95;
    int max_iterations = 400;
    int mc_realizations = 10000;
    int threads = 0; ///< 0: hardware concurrency
};

/// One placement realization pushed through both solvers.
struct DropOutcome {
    std::uint64_t seed = 0;
    bool feasible = false;
    double centralized_power = 0.0; ///< watts
    double distributed_power = 0.0;
    int iterations = 0;    ///< coordination rounds used
    bool converged = false; ///< reached the benchmark fraction within the cap
    Eigen::MatrixXd se;    ///< per-user achieved SE at the stopping iterate
    Eigen::MatrixXd se_required;
};

/// Runs every drop through the centralized LP and, when feasible, the
/// coordinated algorithm with the centralized total power as benchmark.
/// Drops are independent and processed by a worker pool; drop d always uses
/// seed master_seed + d regardless of scheduling.
inline std::vector<DropOutcome> run_drops(const ExperimentConfig &cfg) {
    std::vector<DropOutcome> outcomes(cfg.num_drops);
    std::atomic<int> next{0};
    const int workers =
        cfg.threads > 0 ? cfg.threads
                        : std::max(1u, std::thread::hardware_concurrency());

    auto work = [&]() {
        for (int d = next.fetch_add(1); d < cfg.num_drops; d = next.fetch_add(1)) {
            DropOutcome &out = outcomes[d];
            out.seed = cfg.master_seed + static_cast<std::uint64_t>(d);
            const NetworkScenario sc = generate_drop(cfg.drop, out.seed);
            const PowerControlResult central = solve_centralized(sc, cfg.scheme);
            out.feasible = central.feasible();
            if (!out.feasible) continue;
            out.centralized_power = central.total_power;

            DualDecompositionSettings set;
            set.max_iterations = cfg.max_iterations;
            set.benchmark_fraction = cfg.benchmark_fraction;
            set.benchmark_power = central.total_power;
            // Only the benchmark may stop the run, mirroring the convergence
            // statistic being measured.
            set.residual_tol = 0.0;
            set.sinr_margin_tol = -1.0;
            const DualDecompositionResult dual = run_dual_decomposition(sc, cfg.scheme, set);
            out.distributed_power = dual.total_power;
            out.iterations = dual.iterations;
            out.converged = dual.converged();
            out.se = dual.se;
            out.se_required = sc.qos_se;
        }
    };

    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread &t : pool) t.join();
    return outcomes;
}

/// Distribution statistics of the convergence experiment.
struct ConvergenceSummary {
    int drops = 0;
    int infeasible = 0;
    int converged = 0;
    double one_iteration_fraction = 0.0; ///< of the feasible drops
    double over_cap_fraction = 0.0;
    double mean_iterations = 0.0; ///< over converged drops
};

inline ConvergenceSummary summarize(const std::vector<DropOutcome> &outcomes) {
    ConvergenceSummary s;
    s.drops = static_cast<int>(outcomes.size());
    int feasible = 0, one_shot = 0, over_cap = 0;
    long long iter_sum = 0;
    for (const DropOutcome &o : outcomes) {
        if (!o.feasible) {
            ++s.infeasible;
            continue;
        }
        ++feasible;
        if (o.converged) {
            ++s.converged;
            iter_sum += o.iterations;
            if (o.iterations == 1) ++one_shot;
        } else {
            ++over_cap;
        }
    }
    if (feasible > 0) {
        s.one_iteration_fraction = static_cast<double>(one_shot) / feasible;
        s.over_cap_fraction = static_cast<double>(over_cap) / feasible;
    }
    if (s.converged > 0) s.mean_iterations = static_cast<double>(iter_sum) / s.converged;
    return s;
}

inline void export_convergence_csv(const std::vector<DropOutcome> &outcomes, std::ostream &out) {
    out << "drop,seed,feasible,iterations,converged,centralized_power,distributed_power\n";
    out.precision(17);
    for (std::size_t d = 0; d < outcomes.size(); ++d) {
        const DropOutcome &o = outcomes[d];
        out << d << "," << o.seed << "," << (o.feasible ? 1 : 0) << "," << o.iterations << ","
            << (o.converged ? 1 : 0) << "," << o.centralized_power << ","
            << o.distributed_power << "\n";
    }
}

inline void export_summary_csv(const ConvergenceSummary &s, std::ostream &out) {
    out << "drops,infeasible,converged,one_iteration_fraction,over_cap_fraction,mean_iterations\n";
    out.precision(17);
    out << s.drops << "," << s.infeasible << "," << s.converged << ","
        << s.one_iteration_fraction << "," << s.over_cap_fraction << "," << s.mean_iterations
        << "\n";
}

inline void export_qos_csv(const std::vector<DropOutcome> &outcomes, std::ostream &out) {
    out << "drop,l,k,se_achieved,se_required\n";
    out.precision(17);
    for (std::size_t d = 0; d < outcomes.size(); ++d) {
        const DropOutcome &o = outcomes[d];
        if (!o.feasible) continue;
        for (Eigen::Index l = 0; l < o.se.rows(); ++l)
            for (Eigen::Index k = 0; k < o.se.cols(); ++k)
                out << d << "," << l << "," << k << "," << o.se(l, k) << ","
                    << o.se_required(l, k) << "\n";
    }
}

/// Validation run for the closed-form SE: one drop, the centralized powers
/// if feasible (a uniform split of the budget otherwise), then the
/// simulated moment comparison.
inline MonteCarloReport run_lemma_validation(const ExperimentConfig &cfg) {
    const NetworkScenario sc = generate_drop(cfg.drop, cfg.master_seed);
    const PowerControlResult central = solve_centralized(sc, cfg.scheme);
    PowerAllocation rho = central.feasible()
                              ? central.powers
                              : PowerAllocation{Eigen::MatrixXd::Constant(
                                    sc.cells(), sc.users(),
                                    sc.p_max(0) / sc.users())};
    // The moment comparison operates on the noise-normalized scenario: SINR
    // and SE are scale-invariant, and unit-scale noise keeps the simulated
    // second moments well conditioned.
    return validate_closed_form(sc.noise_normalized(), rho, cfg.scheme, cfg.mc_realizations,
                                cfg.master_seed);
}

enum class ExperimentMode { ConvergenceHistogram, QosCdf, SignalingTable, ValidateClosedForm };

inline ExperimentMode parse_experiment_mode(const std::string &name) {
    if (name == "convergence-histogram") return ExperimentMode::ConvergenceHistogram;
    if (name == "qos-cdf") return ExperimentMode::QosCdf;
    if (name == "signaling-table") return ExperimentMode::SignalingTable;
    if (name == "validate-lemma1") return ExperimentMode::ValidateClosedForm;
    throw std::invalid_argument("unknown experiment mode: " + name);
}

/// Executes one experiment mode and writes its CSV outputs under out_dir.
/// Infeasible drops are reported in the outputs, never as a failure.
inline void run_experiment(const ExperimentConfig &cfg, ExperimentMode mode,
                           const std::string &out_dir) {
    auto open = [&](const std::string &name) {
        std::ofstream f(out_dir + "/" + name);
        if (!f) throw std::runtime_error("cannot write " + out_dir + "/" + name);
        return f;
    };

    switch (mode) {
    case ExperimentMode::ConvergenceHistogram: {
        const auto outcomes = run_drops(cfg);
        auto per_drop = open("convergence.csv");
        export_convergence_csv(outcomes, per_drop);
        auto summary = open("convergence_summary.csv");
        export_summary_csv(summarize(outcomes), summary);
        break;
    }
    case ExperimentMode::QosCdf: {
        const auto outcomes = run_drops(cfg);
        auto f = open("qos_cdf.csv");
        export_qos_csv(outcomes, f);
        break;
    }
    case ExperimentMode::SignalingTable: {
        const auto outcomes = run_drops(cfg);
        const ConvergenceSummary s = summarize(outcomes);
        const int N = std::max(1, static_cast<int>(std::lround(s.mean_iterations)));
        auto f = open("signaling.csv");
        export_signaling_csv(cfg.drop.cells(), cfg.drop.users_per_cell, N, f);
        break;
    }
    case ExperimentMode::ValidateClosedForm: {
        const MonteCarloReport rep = run_lemma_validation(cfg);
        auto users = open("validation_users.csv");
        export_validation_csv(rep, users);
        auto terms = open("validation_terms.csv");
        export_term_csv(rep, terms);
        break;
    }
    }
}

} // namespace mimopc
