#pragma once

#include <ostream>

#include "mimopc/gains.hpp"
#include "mimopc/solver.hpp"

namespace mimopc {

/// Index of rho_{l,k} in the LP variable vector: cells are blocks of K users.
inline Eigen::Index rho_index(int l, int k, int users) { return static_cast<Eigen::Index>(l) * users + k; }

/// Network-wide power-minimization LP over the KL downlink powers:
///
///   minimize   sum_{l,k} rho_{l,k}
///   subject to sinr_{l,k}(rho) >= xi_hat_{l,k}          (KL rows)
///              sum_k rho_{l,k} <= p_max_l               (L rows)
///              rho >= 0                                 (KL rows)
///
/// Each SINR constraint is linear once the target is fixed:
/// xi_hat * (interference + noise) - signal <= 0. A zero target makes the
/// constraint vacuous; it is kept as a duplicate rho_{l,k} >= 0 row so the
/// row layout stays independent of the targets.
inline ConeProgram build_centralized_lp(const NetworkScenario &sc, const EffectiveGains &gains,
                                        const SinrTargets &targets) {
    const int L = sc.cells();
    const int K = sc.users();
    const Eigen::Index n = static_cast<Eigen::Index>(L) * K;
    const double G = gains.array_gain;

    ConeProgram p;
    p.c = Eigen::VectorXd::Ones(n);
    p.G = Eigen::MatrixXd::Zero(n + L + n, n);
    p.h = Eigen::VectorXd::Zero(n + L + n);
    p.orthant_dim = p.G.rows();

    for (int l = 0; l < L; ++l) {
        for (int k = 0; k < K; ++k) {
            const Eigen::Index row = rho_index(l, k, K);
            const double xi = targets.xi_hat(l, k);
            if (xi <= 0.0) {
                p.G(row, rho_index(l, k, K)) = -1.0;
                continue;
            }
            for (int i = 0; i < L; ++i) {
                if (i != l) p.G(row, rho_index(i, k, K)) += xi * G * gains.gamma(l, i, k);
                for (int t = 0; t < K; ++t) p.G(row, rho_index(i, t, K)) += xi * gains.z_gain(l, i, k);
            }
            p.G(row, rho_index(l, k, K)) -= G * gains.gamma(l, l, k);
            p.h(row) = -xi * sc.sigma_dl_sq;
        }
    }
    for (int l = 0; l < L; ++l) {
        const Eigen::Index row = n + l;
        for (int k = 0; k < K; ++k) p.G(row, rho_index(l, k, K)) = 1.0;
        p.h(row) = sc.p_max(l);
    }
    for (Eigen::Index j = 0; j < n; ++j) p.G(n + L + j, j) = -1.0;
    return p;
}

/// Outcome of a power-minimization run, with the achieved per-user SINR and
/// SE replayed through the closed forms.
struct PowerControlResult {
    SolveStatus status = SolveStatus::IterLimit;
    PowerAllocation powers;
    double total_power = 0.0;   ///< watts
    Eigen::MatrixXd sinr;       ///< L x K achieved SINR
    Eigen::MatrixXd se;         ///< L x K achieved SE, b/s/Hz
    int iterations = 0;

    bool feasible() const { return status == SolveStatus::Optimal; }
};

/// Fills the replayed SINR/SE fields from a power matrix.
inline void replay_performance(PowerControlResult &out, const NetworkScenario &sc,
                               const EffectiveGains &gains) {
    const int L = sc.cells();
    const int K = sc.users();
    out.sinr.resize(L, K);
    out.se.resize(L, K);
    for (int l = 0; l < L; ++l)
        for (int k = 0; k < K; ++k) {
            out.sinr(l, k) = closed_form_sinr(out.powers, gains, sc, l, k);
            out.se(l, k) = se_from_sinr(out.sinr(l, k), sc.config);
        }
    out.total_power = out.powers.rho.sum();
}

/// Solves the network-wide LP. The scenario is noise-normalized internally
/// (scaling beta and both noise powers by a common factor changes no SINR),
/// which keeps the LP data near unit scale; the returned powers are watts
/// either way.
inline PowerControlResult solve_centralized(const NetworkScenario &sc, Precoder scheme,
                                            const SolverSettings &settings = {}) {
    const NetworkScenario norm = sc.noise_normalized();
    const EffectiveGains gains = EffectiveGains::compute(norm, scheme);
    const SinrTargets targets = qos_to_sinr_target(norm);
    const ConeProgram lp = build_centralized_lp(norm, gains, targets);
    const SolveResult res = solve_lp(lp, settings);

    PowerControlResult out;
    out.status = res.status;
    out.iterations = res.iterations;
    out.powers = PowerAllocation::zero(sc.config);
    if (res.status != SolveStatus::Optimal) return out;
    const int K = sc.users();
    for (int l = 0; l < sc.cells(); ++l)
        for (int k = 0; k < K; ++k) out.powers.rho(l, k) = std::max(0.0, res.x(rho_index(l, k, K)));
    replay_performance(out, norm, gains);
    return out;
}

/// Writes one CSV row per user: cell, user, power, achieved SINR and SE.
inline void export_power_csv(const PowerControlResult &r, std::ostream &out) {
    out << "l,k,rho_watts,sinr,se\n";
    out.precision(17);
    for (Eigen::Index l = 0; l < r.powers.rho.rows(); ++l)
        for (Eigen::Index k = 0; k < r.powers.rho.cols(); ++k)
            out << l << "," << k << "," << r.powers.rho(l, k) << "," << r.sinr(l, k) << ","
                << r.se(l, k) << "\n";
}

} // namespace mimopc
