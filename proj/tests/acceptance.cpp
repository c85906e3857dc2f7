// Acceptance gate: one self-contained check per release criterion, each
// printing a single pass/fail line. Exit status is the number of failures.

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "mimopc/experiment.hpp"

using namespace mimopc;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

int failures = 0;

void report(int num, const char *what, bool ok, const std::string &detail) {
    std::printf("criterion %d [%s] %s (%s)\n", num, ok ? "PASS" : "FAIL", what, detail.c_str());
    if (!ok) ++failures;
}

std::string fmt(const char *pattern, double a, double b = 0.0) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), pattern, a, b);
    return buf;
}

/// Random LP with a bounded feasible region (box plus extra cuts).
ConeProgram random_box_lp(int n, int extra_rows, std::mt19937_64 &rng) {
    std::normal_distribution<double> gauss;
    ConeProgram p;
    const int m = 2 * n + extra_rows;
    p.c = VectorXd::NullaryExpr(n, [&](auto) { return gauss(rng); });
    p.G = MatrixXd::Zero(m, n);
    p.h = VectorXd::Zero(m);
    for (int j = 0; j < n; ++j) {
        p.G(2 * j, j) = 1.0;
        p.h(2 * j) = 1.0 + std::abs(gauss(rng));
        p.G(2 * j + 1, j) = -1.0;
        p.h(2 * j + 1) = 1.0 + std::abs(gauss(rng));
    }
    for (int i = 0; i < extra_rows; ++i) {
        for (int j = 0; j < n; ++j) p.G(2 * n + i, j) = gauss(rng);
        p.h(2 * n + i) = 1.0 + std::abs(gauss(rng));
    }
    p.orthant_dim = m;
    return p;
}

/// Feasible SOCP with a planted primal-dual optimal pair: pick (s*, z*)
/// complementary per cone, x* arbitrary, then h = Gx* + s*, c = -G'z*.
struct Planted {
    ConeProgram prog;
    double objective = 0.0;
};

Planted plant_socp(int n, std::mt19937_64 &rng) {
    std::normal_distribution<double> gauss;
    std::uniform_int_distribution<int> coin(0, 1);
    Planted out;
    ConeProgram &p = out.prog;

    const int n_orth = n + 2;
    std::vector<Eigen::Index> socs;
    const int n_socs = 2 + coin(rng);
    int m = n_orth;
    for (int j = 0; j < n_socs; ++j) {
        socs.push_back(3 + std::uniform_int_distribution<int>(0, 3)(rng));
        m += static_cast<int>(socs.back());
    }

    p.G = MatrixXd::NullaryExpr(m, n, [&](auto, auto) { return gauss(rng); });
    p.orthant_dim = n_orth;
    p.soc_dims = socs;

    VectorXd s(m), z(m);
    for (int i = 0; i < n_orth; ++i) {
        if (coin(rng)) {
            s(i) = 0.5 + std::abs(gauss(rng));
            z(i) = 0.0;
        } else {
            s(i) = 0.0;
            z(i) = 0.5 + std::abs(gauss(rng));
        }
    }
    int at = n_orth;
    for (Eigen::Index d : socs) {
        const int mode = std::uniform_int_distribution<int>(0, 2)(rng);
        VectorXd u = VectorXd::NullaryExpr(d - 1, [&](auto) { return gauss(rng); });
        const double t = u.norm();
        if (mode == 0) {
            s(at) = t + 1.0 + std::abs(gauss(rng));
            s.segment(at + 1, d - 1) = u;
            z.segment(at, d).setZero();
        } else if (mode == 1) {
            z(at) = t + 1.0 + std::abs(gauss(rng));
            z.segment(at + 1, d - 1) = u;
            s.segment(at, d).setZero();
        } else {
            const double a = 0.5 + std::abs(gauss(rng));
            const double b = 0.5 + std::abs(gauss(rng));
            s(at) = a * t;
            s.segment(at + 1, d - 1) = a * u;
            z(at) = b * t;
            z.segment(at + 1, d - 1) = -b * u;
        }
        at += static_cast<int>(d);
    }

    const VectorXd x_star = VectorXd::NullaryExpr(n, [&](auto) { return gauss(rng); });
    p.h = p.G * x_star + s;
    p.c = -p.G.transpose() * z;
    out.objective = p.c.dot(x_star);
    return out;
}

/// Independent oracle for the centralized LP: the minimum-power solution with
/// loose budgets is the fixed point of rho <- target * (interference + noise)
/// / signal_gain, iterated from zero.
MatrixXd fixed_point_powers(const NetworkScenario &sc, Precoder scheme) {
    const auto gains = EffectiveGains::compute(sc, scheme);
    const auto targets = qos_to_sinr_target(sc);
    const int L = sc.cells(), K = sc.users();
    PowerAllocation rho = PowerAllocation::zero(sc.config);
    for (int sweep = 0; sweep < 200000; ++sweep) {
        double delta = 0.0;
        for (int l = 0; l < L; ++l)
            for (int k = 0; k < K; ++k) {
                double denom = sc.sigma_dl_sq;
                for (int i = 0; i < L; ++i) {
                    if (i != l) denom += gains.array_gain * rho.rho(i, k) * gains.gamma(l, i, k);
                    for (int t = 0; t < K; ++t) denom += rho.rho(i, t) * gains.z_gain(l, i, k);
                }
                const double next =
                    targets.xi_hat(l, k) * denom / (gains.array_gain * gains.gamma(l, l, k));
                delta = std::max(delta, std::abs(next - rho.rho(l, k)) /
                                            std::max(1e-30, std::abs(next)));
                rho.rho(l, k) = next;
            }
        if (delta < 1e-14) break;
    }
    return rho.rho;
}

void criterion_1() {
    std::mt19937_64 rng(20260826);
    double worst_obj = 0.0, worst_gap = 0.0;
    bool ok = true;
    for (int trial = 0; trial < 100; ++trial) {
        const Planted planted = plant_socp(5, rng);
        const SolveResult res = solve_socp(planted.prog);
        if (res.status != SolveStatus::Optimal) {
            ok = false;
            continue;
        }
        const double scale = std::max(1.0, std::abs(planted.objective));
        worst_obj = std::max(worst_obj, std::abs(res.objective - planted.objective) / scale);
        worst_gap = std::max(worst_gap, res.gap / std::max(1.0, std::abs(res.objective)));
    }
    ok = ok && worst_obj <= 1e-6 && worst_gap <= 1e-6;
    report(1, "planted SOCP recovery on 100 random instances", ok,
           fmt("worst rel objective %.2e, worst rel gap %.2e", worst_obj, worst_gap));
}

void criterion_2() {
    std::mt19937_64 rng(7501);
    double worst = 0.0;
    bool ok = true;
    for (int trial = 0; trial < 50; ++trial) {
        const ConeProgram p = random_box_lp(3, 4, rng);
        const SolveResult lp = solve_lp(p);
        if (lp.status != SolveStatus::Optimal) {
            ok = false;
            continue;
        }
        ConeProgram q;
        q.c = p.c;
        const int m = static_cast<int>(p.num_rows());
        q.G = MatrixXd::Zero(2 * m, p.num_vars());
        q.h = VectorXd::Zero(2 * m);
        for (int i = 0; i < m; ++i) {
            q.G.row(2 * i) = p.G.row(i);
            q.h(2 * i) = p.h(i);
        }
        q.orthant_dim = 0;
        q.soc_dims.assign(m, 2);
        const SolveResult socp = solve_socp(q);
        if (socp.status != SolveStatus::Optimal) {
            ok = false;
            continue;
        }
        worst = std::max(worst, std::abs(socp.objective - lp.objective) /
                                    std::max(1.0, std::abs(lp.objective)));
    }
    ok = ok && worst <= 1e-7;
    report(2, "LP agrees with its degenerate-SOCP encoding on 50 instances", ok,
           fmt("worst rel objective difference %.2e", worst));
}

void criterion_3() {
    DropConfig cfg;
    cfg.grid_x = 2;
    cfg.grid_y = 1;
    cfg.users_per_cell = 2;
    cfg.antennas = 100;
    cfg.p_max_watts = 1000.0; // budgets inactive by construction
    SolverSettings tight;
    tight.feastol = tight.abstol = tight.reltol = 1e-11;
    double worst = 0.0;
    int solved = 0;
    std::uint64_t seed = 0;
    while (solved < 50 && seed < 200) {
        const NetworkScenario sc = generate_drop(cfg, seed++);
        const PowerControlResult res = solve_centralized(sc, Precoder::ZF, tight);
        if (!res.feasible()) continue;
        ++solved;
        const MatrixXd oracle = fixed_point_powers(sc, Precoder::ZF);
        for (int l = 0; l < 2; ++l)
            for (int k = 0; k < 2; ++k)
                worst = std::max(worst, std::abs(res.powers.rho(l, k) - oracle(l, k)) /
                                            std::max(1e-12, oracle(l, k)));
    }
    const bool ok = solved == 50 && worst <= 1e-6;
    report(3, "centralized LP matches the interference fixed point on 50 drops", ok,
           fmt("%.0f drops solved, worst per-user rel error %.2e", solved, worst));
}

void criterion_4() {
    DropConfig cfg;
    cfg.grid_x = 2;
    cfg.grid_y = 1;
    cfg.users_per_cell = 2;
    cfg.antennas = 100;
    int feasible = 0, within = 0;
    for (std::uint64_t seed = 100; seed < 120; ++seed) {
        const NetworkScenario sc = generate_drop(cfg, seed);
        const PowerControlResult central = solve_centralized(sc, Precoder::ZF);
        if (!central.feasible()) continue;
        ++feasible;
        const DualDecompositionResult res = run_dual_decomposition(sc, Precoder::ZF);
        if (res.converged() && res.iterations <= 400 &&
            std::abs(res.total_power - central.total_power) <= 0.01 * central.total_power)
            ++within;
    }
    const bool ok = feasible > 0 && 10 * within >= 9 * feasible;
    report(4, "coordinated runs land within 1% of the centralized optimum", ok,
           fmt("%.0f of %.0f feasible drops within 1%%", within, feasible));
}

ConvergenceSummary criteria_5_6() {
    ExperimentConfig cfg; // defaults: 2x2 grid, K=10, M=100
    cfg.num_drops = 200;
    cfg.master_seed = 1;
    const std::vector<DropOutcome> outcomes = run_drops(cfg);
    const ConvergenceSummary s = summarize(outcomes);

    const bool ok5 = s.one_iteration_fraction >= 0.05 && s.one_iteration_fraction <= 0.25 &&
                     s.over_cap_fraction <= 0.05;
    report(5, "large-network convergence statistics over 200 drops", ok5,
           fmt("one-iteration fraction %.3f, over-cap fraction %.3f", s.one_iteration_fraction,
               s.over_cap_fraction));

    long long users = 0, satisfied = 0;
    for (const DropOutcome &o : outcomes) {
        if (!o.feasible || !o.converged) continue;
        for (Eigen::Index l = 0; l < o.se.rows(); ++l)
            for (Eigen::Index k = 0; k < o.se.cols(); ++k) {
                ++users;
                if (o.se(l, k) >= 0.95 * o.se_required(l, k)) ++satisfied;
            }
    }
    const double frac = users > 0 ? static_cast<double>(satisfied) / users : 0.0;
    report(6, "QoS held at the early-stopping iterate for most users", frac >= 0.90,
           fmt("%.1f%% of %.0f users at >= 95%% of their requirement", 100.0 * frac,
               static_cast<double>(users)));
    return s;
}

void criterion_7() {
    DropConfig cfg;
    cfg.grid_x = 2;
    cfg.grid_y = 1;
    cfg.users_per_cell = 2;
    cfg.antennas = 32;
    const NetworkScenario sc = generate_drop(cfg, 5);
    const PowerControlResult central = solve_centralized(sc, Precoder::ZF);
    const PowerAllocation rho =
        central.feasible() ? central.powers
                           : PowerAllocation{MatrixXd::Constant(2, 2, sc.p_max(0) / 2.0)};
    const MonteCarloReport rep =
        validate_closed_form(sc.noise_normalized(), rho, Precoder::ZF, 10000, 5);
    double worst_se = 0.0;
    for (Eigen::Index l = 0; l < rep.se_mc.rows(); ++l)
        for (Eigen::Index k = 0; k < rep.se_mc.cols(); ++k)
            worst_se = std::max(worst_se, std::abs(rep.se_mc(l, k) - rep.se_closed(l, k)) /
                                              std::max(1e-12, rep.se_closed(l, k)));
    const bool ok = rep.max_abs_z <= 3.0 && worst_se <= 0.02;
    report(7, "closed-form rate terms match channel simulation", ok,
           fmt("worst term z-score %.2f, worst SE rel error %.4f", rep.max_abs_z, worst_se));
}

void criterion_8() {
    bool ok = true;
    for (auto [L, K] : {std::pair{2, 1}, std::pair{4, 10}, std::pair{8, 5}}) {
        const long long Lm1 = L - 1;
        const long long c_vars = static_cast<long long>(L) * K;
        const long long c_exch = 2LL * K * L * L + 2LL * K * L;
        const long long b_vars = static_cast<long long>(K) * L * L;
        const long long b_exch = 2LL * K * Lm1 * Lm1 * L + static_cast<long long>(K) * Lm1 * L;
        const int N = 7;
        const long long d_vars = 2LL * K * L * L - static_cast<long long>(K) * L + L;
        const long long d_exch = 4LL * K * Lm1 * Lm1 * N + 2LL * K * Lm1 * L;
        const auto c = count_signaling(Strategy::Centralized, L, K);
        const auto b = count_signaling(Strategy::BasicDistributed, L, K);
        const auto d = count_signaling(Strategy::DualDecomposition, L, K, N);
        ok = ok && c.optimization_variables == c_vars && c.exchanged_parameters == c_exch &&
             b.optimization_variables == b_vars && b.exchanged_parameters == b_exch &&
             d.optimization_variables == d_vars && d.exchanged_parameters == d_exch;
    }
    report(8, "signaling tallies match independent arithmetic for three network sizes", ok,
           ok ? "all six formulas agree" : "mismatch");
}

void criterion_9() {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> pick_l(1, 8), pick_k(1, 12);
    std::uniform_real_distribution<double> pick_eps(1e-10, 1e-2);
    double worst = 0.0;
    for (int t = 0; t < 10; ++t) {
        const int L = pick_l(rng), K = pick_k(rng);
        const double eps = pick_eps(rng);
        const double m = static_cast<double>(K) * (2 * L - 1) + 1;
        const double delta = std::log(1.0 / eps) * std::sqrt(2.0 * L * K + 4.0);
        const double per_iter = static_cast<double>(L) * K * K * K + 6.0 * L * K * K +
                                static_cast<double>(K) * L * L + 6.0 * L * K + 3.0 * K + 5.0 +
                                m * m;
        const double expect = delta * per_iter * m;
        const double got = subproblem_complexity(L, K, eps);
        worst = std::max(worst, std::abs(got - expect) / expect);
    }
    report(9, "per-cell solve cost matches its duplicate evaluation", worst <= 1e-15,
           fmt("worst rel deviation %.2e", worst));
}

} // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criteria_5_6();
    criterion_7();
    criterion_8();
    criterion_9();
    std::printf("%s: %d of 9 criteria failed\n", failures == 0 ? "ACCEPTED" : "REJECTED",
                failures);
    return failures;
}
