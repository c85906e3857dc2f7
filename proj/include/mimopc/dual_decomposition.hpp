#pragma once

#include <optional>
#include <ostream>
#include <vector>

#include "mimopc/centralized.hpp"
#include "mimopc/gains.hpp"
#include "mimopc/solver.hpp"

namespace mimopc {

/// Inter-cell interference bookkeeping shared between the per-cell solvers
/// and the coordinator. Entry (l, i, k) concerns the interference that BS i
/// inflicts on user k of cell l (diagonal i == l unused):
///   theta       - value reported by the interfering BS i,
///   theta_tilde - value believed by the serving BS l,
///   lambda      - multiplier pricing the gap between the two.
struct ConsistencyState {
    Tensor3 theta;
    Tensor3 theta_tilde;
    Tensor3 lambda;
    /// Per-link unit of the consistency pair: theta and theta_tilde are kept
    /// and exchanged as multiples of scale(l,i,k). Measuring every link in
    /// its own natural interference unit equalizes the curvature the price
    /// update sees, so one fixed step size works across links whose physical
    /// magnitudes differ by orders of magnitude.
    Tensor3 scale;

    static ConsistencyState zeros(int L, int K) {
        ConsistencyState st{Tensor3(L, L, K), Tensor3(L, L, K), Tensor3(L, L, K),
                            Tensor3(L, L, K)};
        for (double &u : st.scale.data()) u = 1.0;
        return st;
    }
};

/// Variable layout of the per-cell subproblem for BS l. Powers enter through
/// their square roots (rho = q^2), which makes the local cost strictly convex
/// and every constraint second-order-cone representable:
///   q_k           - K root powers of the local users,
///   s             - epigraph of the priced local cost (the objective),
///   theta(i,k)    - interference caused to user k of cell i != l,
///   theta_tilde(i,k) - believed interference received by local user k from
///                      BS i != l.
struct SubproblemLayout {
    int L = 0, K = 0, cell = 0;

    Eigen::Index num_vars() const { return static_cast<Eigen::Index>(K) * (2 * L - 1) + 1; }
    Eigen::Index q(int k) const { return k; }
    Eigen::Index s() const { return K; }
    /// Position of foreign cell i in the compacted list of cells != cell.
    int pos(int i) const { return i < cell ? i : i - 1; }
    Eigen::Index theta(int i, int k) const {
        return K + 1 + static_cast<Eigen::Index>(pos(i)) * K + k;
    }
    Eigen::Index theta_tilde(int i, int k) const {
        return K + 1 + static_cast<Eigen::Index>(K) * (L - 1) + static_cast<Eigen::Index>(pos(i)) * K + k;
    }
};

/// Second-order cone program solved by BS l for fixed multipliers:
///
///   minimize   s
///   subject to sum_k q_k^2 + priced consistency terms <= s   (epigraph cone)
///              local SINR_k >= xi_hat_k with believed          (K QoS cones)
///                  inter-cell interference theta_tilde,
///              caused interference to (i,k) <= theta(i,k)^2   ((L-1)K cones)
///              sum_k q_k^2 <= p_max_l                         (budget cone)
///              all variables but s nonnegative                (orthant)
///
/// The epigraph constraint s >= sum q^2 + y (y collecting the lambda-priced
/// theta terms) uses the identity s - y = ((1+s-y)^2 - (1-s+y)^2) / 4 to fit
/// a single cone. A zero SINR target makes that user's QoS cone vacuous, so
/// it is skipped.
///
/// theta_scale, when given, holds the per-link units of the consistency
/// variables: the program's theta(i,k) stands for the physical amplitude
/// divided by theta_scale(i,l,k), and theta_tilde(i,k) for the believed
/// amplitude divided by theta_scale(l,i,k).
inline ConeProgram build_subproblem_socp(const NetworkScenario &sc, const EffectiveGains &gains,
                                         const SinrTargets &targets, const Tensor3 &lambda,
                                         int l, const Tensor3 *theta_scale = nullptr) {
    const int L = sc.cells();
    const int K = sc.users();
    const SubproblemLayout lay{L, K, l};
    const Eigen::Index n = lay.num_vars();
    const double G = gains.array_gain;

    int qos_cones = 0;
    for (int k = 0; k < K; ++k)
        if (targets.xi_hat(l, k) > 0.0) ++qos_cones;

    const Eigen::Index n_orth = n - 1;
    const Eigen::Index m = n_orth + qos_cones * (K + L + 1) + (K + 2) +
                           static_cast<Eigen::Index>(L - 1) * K * (K + 2) + (K + 1);

    ConeProgram p;
    p.c = Eigen::VectorXd::Zero(n);
    p.c(lay.s()) = 1.0;
    p.G = Eigen::MatrixXd::Zero(m, n);
    p.h = Eigen::VectorXd::Zero(m);
    p.orthant_dim = n_orth;

    Eigen::Index row = 0;
    for (Eigen::Index j = 0; j < n; ++j)
        if (j != lay.s()) p.G(row++, j) = -1.0;

    // QoS cones: || (sqrt(z_ll) q_1..q_K, theta_tilde_1..theta_tilde_{L-1},
    // sigma) || <= q_k sqrt(G gamma_ll / xi_hat).
    for (int k = 0; k < K; ++k) {
        const double xi = targets.xi_hat(l, k);
        if (xi <= 0.0) continue;
        p.G(row, lay.q(k)) = -std::sqrt(G * gains.gamma(l, l, k) / xi);
        ++row;
        const double sz = std::sqrt(gains.z_gain(l, l, k));
        for (int t = 0; t < K; ++t) p.G(row++, lay.q(t)) = -sz;
        for (int i = 0; i < L; ++i)
            if (i != l)
                p.G(row++, lay.theta_tilde(i, k)) =
                    -(theta_scale ? (*theta_scale)(l, i, k) : 1.0);
        p.h(row++) = std::sqrt(sc.sigma_dl_sq);
        p.soc_dims.push_back(K + L + 1);
    }

    // Epigraph cone with the priced consistency sum
    //   y = sum_{k, i != l} (lambda(i,l,k) theta(i,k)
    //                        - lambda(l,i,k) theta_tilde(i,k)):
    // || (q, (1 - s + y)/2) || <= (1 + s - y)/2.
    {
        const Eigen::Index head = row;
        p.G(head, lay.s()) = -0.5;
        p.h(head) = 0.5;
        ++row;
        for (int t = 0; t < K; ++t) p.G(row++, lay.q(t)) = -1.0;
        const Eigen::Index last = row;
        p.G(last, lay.s()) = 0.5;
        p.h(last) = 0.5;
        for (int k = 0; k < K; ++k)
            for (int i = 0; i < L; ++i) {
                if (i == l) continue;
                p.G(head, lay.theta(i, k)) = 0.5 * lambda(i, l, k);
                p.G(head, lay.theta_tilde(i, k)) = -0.5 * lambda(l, i, k);
                p.G(last, lay.theta(i, k)) = -0.5 * lambda(i, l, k);
                p.G(last, lay.theta_tilde(i, k)) = 0.5 * lambda(l, i, k);
            }
        ++row;
        p.soc_dims.push_back(K + 2);
    }

    // Caused-interference cones: || (q_k sqrt(G gamma_il), sqrt(z_il) q) ||
    // <= theta(i,k), covering G q_k^2 gamma + sum_t q_t^2 z <= theta^2.
    for (int i = 0; i < L; ++i) {
        if (i == l) continue;
        for (int k = 0; k < K; ++k) {
            p.G(row++, lay.theta(i, k)) = -(theta_scale ? (*theta_scale)(i, l, k) : 1.0);
            p.G(row, lay.q(k)) = -std::sqrt(G * gains.gamma(i, l, k));
            ++row;
            const double sz = std::sqrt(gains.z_gain(i, l, k));
            for (int t = 0; t < K; ++t) p.G(row++, lay.q(t)) = -sz;
            p.soc_dims.push_back(K + 2);
        }
    }

    // Budget cone: || q || <= sqrt(p_max).
    p.h(row++) = std::sqrt(sc.p_max(l));
    for (int t = 0; t < K; ++t) p.G(row++, lay.q(t)) = -1.0;
    p.soc_dims.push_back(K + 1);

    return p;
}

/// Per-iteration record of the coordinated run.
struct DualTraceEntry {
    int iteration = 0;
    double total_power = 0.0;      ///< watts
    double max_residual = 0.0;     ///< max |theta_tilde - theta|
    double min_sinr_margin = 0.0;  ///< min achieved/target - 1 over users
    long long exchanged_parameters = 0; ///< cumulative backhaul scalars
};

struct DualDecompositionSettings {
    SolverSettings solver;
    double step_size = 0.01;
    /// Use step_size / sqrt(n) at iteration n instead of a constant step.
    /// The damping tames the price oscillation on large networks where the
    /// constant default overshoots.
    bool diminishing_step = false;
    /// Target per-iteration contraction of the price recursion. The first
    /// two iterations double as a finite-difference probe of each link's
    /// dual curvature; every link's consistency unit is then chosen so that
    /// the fixed step contracts that link's price error by roughly this
    /// factor per iteration. Must lie in (0, 2) for stability; above 1 the
    /// prices overshoot their stationary values, which together with the
    /// decay damping below keeps intermediate iterates protective.
    double target_contraction = 1.5;
    /// Shrinks the very first price step, which only serves as the probe for
    /// the curvature estimate. The subproblem response is linear in the
    /// price, so a small probe keeps the second iterate next to the first
    /// instead of launching a transient, without hurting the estimate.
    double probe_step_scale = 1e-3;
    /// Extra damping on price decreases. Price errors are asymmetric: an
    /// under-priced link makes its serving BS under-protect a user (a QoS
    /// miss), an over-priced link merely wastes a little power. Slower
    /// decreases keep the intermediate iterates on the protective side.
    double price_decay_scale = 0.25;
    int max_iterations = 400;
    double residual_tol = 1e-3;     ///< consistency gap for convergence
    double sinr_margin_tol = 0.01;  ///< tolerated relative SINR shortfall
    /// Optional early stop once the iterate reaches this fraction of a known
    /// benchmark objective (the iterates climb towards it from below).
    double benchmark_fraction = 0.95;
    std::optional<double> benchmark_power;
};

struct DualDecompositionResult {
    SolveStatus status = SolveStatus::IterLimit;
    int iterations = 0;
    PowerAllocation powers;
    double total_power = 0.0;
    Eigen::MatrixXd sinr; ///< replayed through the closed form
    Eigen::MatrixXd se;
    ConsistencyState state;
    std::vector<DualTraceEntry> trace;

    bool converged() const { return status == SolveStatus::Optimal; }
};

/// Backhaul scalars exchanged per coordination iteration: the coordinator
/// gathers 2K(L-1) consistency values from each of the L-1 remote BSs and
/// returns 2K(L-1) updated multipliers to each.
inline long long dual_exchanged_per_iteration(int L, int K) {
    return 4LL * K * (L - 1) * (L - 1);
}

/// One multiplier update: lambda <- [lambda - step (theta_tilde - theta)]_+.
/// The believed value exceeding the reported one means the serving BS is
/// over-protecting itself, so the price of that link drops; decay_scale < 1
/// slows that direction down.
inline void subgradient_update(ConsistencyState &st, double step, double decay_scale = 1.0) {
    const int L = static_cast<int>(st.lambda.dim0());
    const int K = static_cast<int>(st.lambda.dim2());
    for (int l = 0; l < L; ++l)
        for (int i = 0; i < L; ++i) {
            if (i == l) continue;
            for (int k = 0; k < K; ++k) {
                const double g = st.theta_tilde(l, i, k) - st.theta(l, i, k);
                st.lambda(l, i, k) =
                    std::max(0.0, st.lambda(l, i, k) - step * (g > 0.0 ? decay_scale * g : g));
            }
        }
}

/// Solves the subproblem of BS l and scatters q^2, theta and theta_tilde
/// into the shared containers. Returns false if the local program has no
/// feasible point (QoS unreachable within the power budget).
inline bool solve_subproblem(const NetworkScenario &sc, const EffectiveGains &gains,
                             const SinrTargets &targets, int l, ConsistencyState &st,
                             PowerAllocation &powers, const SolverSettings &settings) {
    const ConeProgram prog = build_subproblem_socp(sc, gains, targets, st.lambda, l, &st.scale);
    const SolveResult res = solve_socp(prog, settings);
    if (res.status != SolveStatus::Optimal) return false;
    const SubproblemLayout lay{sc.cells(), sc.users(), l};
    for (int k = 0; k < sc.users(); ++k) {
        const double q = std::max(0.0, res.x(lay.q(k)));
        powers.rho(l, k) = q * q;
    }
    for (int i = 0; i < sc.cells(); ++i) {
        if (i == l) continue;
        for (int k = 0; k < sc.users(); ++k) {
            // Report the exact caused interference rather than the cone slack:
            // with a zero price the slack is degenerate (any value above the
            // true one is optimal), while the exact value is what the update
            // of the multipliers is meant to see.
            double caused = gains.array_gain * powers.rho(l, k) * gains.gamma(i, l, k);
            for (int t = 0; t < sc.users(); ++t) caused += powers.rho(l, t) * gains.z_gain(i, l, k);
            st.theta(i, l, k) = std::sqrt(caused) / st.scale(i, l, k);
            st.theta_tilde(l, i, k) = std::max(0.0, res.x(lay.theta_tilde(i, k)));
        }
    }
    return true;
}

/// Coordinated power control: every BS solves its cone program for the
/// current prices, the coordinator measures the consistency gaps and runs a
/// projected subgradient step on the multipliers. Prices start at zero, so
/// the BSs initially ignore the interference they cause and the total power
/// climbs towards the network-wide optimum from below.
inline DualDecompositionResult run_dual_decomposition(const NetworkScenario &sc, Precoder scheme,
                                                      const DualDecompositionSettings &settings = {}) {
    const NetworkScenario norm = sc.noise_normalized();
    const EffectiveGains gains = EffectiveGains::compute(norm, scheme);
    const SinrTargets targets = qos_to_sinr_target(norm);
    const int L = sc.cells();
    const int K = sc.users();

    DualDecompositionResult out;
    out.state = ConsistencyState::zeros(L, K);
    out.powers = PowerAllocation::zero(sc.config);
    out.trace.reserve(settings.max_iterations);

    // Snapshots of the first two iterations, used as a finite-difference
    // probe of the per-link dual curvature d(theta_tilde - theta)/d lambda.
    Tensor3 grad1(L, L, K), lambda1(L, L, K);

    for (int iter = 1; iter <= settings.max_iterations; ++iter) {
        for (int l = 0; l < L; ++l) {
            if (!solve_subproblem(norm, gains, targets, l, out.state, out.powers,
                                  settings.solver)) {
                out.status = SolveStatus::Infeasible;
                out.iterations = iter;
                return out;
            }
        }

        double residual = 0.0;
        for (int l = 0; l < L; ++l)
            for (int i = 0; i < L; ++i) {
                if (i == l) continue;
                for (int k = 0; k < K; ++k)
                    residual = std::max(residual, std::abs(out.state.theta_tilde(l, i, k) -
                                                           out.state.theta(l, i, k)));
            }

        double margin = std::numeric_limits<double>::infinity();
        for (int l = 0; l < L; ++l)
            for (int k = 0; k < K; ++k) {
                const double xi = targets.xi_hat(l, k);
                if (xi <= 0.0) continue;
                margin = std::min(margin,
                                  closed_form_sinr(out.powers, gains, norm, l, k) / xi - 1.0);
            }
        if (!std::isfinite(margin)) margin = 0.0;

        DualTraceEntry entry;
        entry.iteration = iter;
        entry.total_power = out.powers.rho.sum();
        entry.max_residual = residual;
        entry.min_sinr_margin = margin;
        entry.exchanged_parameters =
            static_cast<long long>(iter) * dual_exchanged_per_iteration(L, K) +
            2LL * K * (L - 1) * L;
        out.trace.push_back(entry);
        out.iterations = iter;

        const bool consistent = residual <= settings.residual_tol &&
                                margin >= -settings.sinr_margin_tol;
        // Reaching the benchmark means the minimization iterate is close to
        // it from either side; an iterate far above the benchmark is a price
        // transient, not a near-optimal allocation, so it does not stop the
        // run. The absolute slack keeps near-zero benchmarks (all-zero
        // targets) from demanding more precision than either solver carries.
        const bool hit_benchmark =
            settings.benchmark_power &&
            entry.total_power >=
                settings.benchmark_fraction * *settings.benchmark_power - 1e-9 &&
            entry.total_power <=
                *settings.benchmark_power / settings.benchmark_fraction + 1e-9;
        if (consistent || hit_benchmark) {
            out.status = SolveStatus::Optimal;
            break;
        }

        if (iter == 1) {
            for (std::size_t j = 0; j < grad1.size(); ++j) {
                grad1.data()[j] =
                    out.state.theta_tilde.data()[j] - out.state.theta.data()[j];
                lambda1.data()[j] = out.state.lambda.data()[j];
            }
        } else {
            // Re-unit every link from the last step's finite difference: with
            // curvature c the price recursion contracts by (1 - step c / r^2)
            // per iteration after dividing the unit by r, so r = sqrt(step c
            // / target) hits the requested rate. Iteration 2 (the probe from
            // physical units) applies the estimate fully; later iterations
            // only nudge the units, because the per-link differences are
            // polluted by the cross-link coupling.
            const double blend = iter == 2 ? 1.0 : 0.25;
            Tensor3 ratio(L, L, K);
            double r_max = 0.0;
            for (std::size_t j = 0; j < ratio.size(); ++j) {
                const double dl = out.state.lambda.data()[j] - lambda1.data()[j];
                const double dg = (out.state.theta_tilde.data()[j] -
                                   out.state.theta.data()[j]) - grad1.data()[j];
                const double c = dl > 0.0 ? dg / dl : 0.0;
                if (c > 0.0) {
                    const double r_star =
                        std::sqrt(settings.step_size * c / settings.target_contraction);
                    ratio.data()[j] = iter == 2 ? r_star
                                                : std::clamp(std::pow(r_star, blend), 0.5, 2.0);
                    r_max = std::max(r_max, ratio.data()[j]);
                }
            }
            if (r_max > 0.0) {
                for (std::size_t j = 0; j < ratio.size(); ++j)
                    if (ratio.data()[j] <= 0.0) ratio.data()[j] = iter == 2 ? r_max : 1.0;
                for (std::size_t j = 0; j < ratio.size(); ++j) {
                    const double r = ratio.data()[j];
                    out.state.scale.data()[j] *= r;
                    out.state.lambda.data()[j] *= r;
                    out.state.theta.data()[j] /= r;
                    out.state.theta_tilde.data()[j] /= r;
                }
            }
            for (std::size_t j = 0; j < grad1.size(); ++j) {
                grad1.data()[j] =
                    out.state.theta_tilde.data()[j] - out.state.theta.data()[j];
                lambda1.data()[j] = out.state.lambda.data()[j];
            }
        }

        const double step = settings.diminishing_step
                                ? settings.step_size / std::sqrt(static_cast<double>(iter))
                                : settings.step_size;
        subgradient_update(out.state, iter == 1 ? step * settings.probe_step_scale : step,
                           settings.price_decay_scale);
    }

    out.total_power = out.powers.rho.sum();
    out.sinr.resize(L, K);
    out.se.resize(L, K);
    for (int l = 0; l < L; ++l)
        for (int k = 0; k < K; ++k) {
            out.sinr(l, k) = closed_form_sinr(out.powers, gains, norm, l, k);
            out.se(l, k) = se_from_sinr(out.sinr(l, k), sc.config);
        }
    return out;
}

/// Writes the per-iteration trace as CSV.
inline void export_trace_csv(const DualDecompositionResult &r, std::ostream &out) {
    out << "iter,total_power,max_residual,min_sinr_margin,exchanged_params\n";
    out.precision(17);
    for (const DualTraceEntry &e : r.trace)
        out << e.iteration << "," << e.total_power << "," << e.max_residual << ","
            << e.min_sinr_margin << "," << e.exchanged_parameters << "\n";
}

/// Worst-case interior-point cost of one per-cell subproblem at accuracy
/// eps: iteration count delta times the per-iteration arithmetic, in flops.
inline double subproblem_complexity(int L, int K, double eps) {
    const double m = static_cast<double>(K) * (2 * L - 1) + 1;
    const double delta = std::log(1.0 / eps) * std::sqrt(2.0 * L * K + 4.0);
    const double per_iter = static_cast<double>(L) * K * K * K + 6.0 * L * K * K +
                            static_cast<double>(K) * L * L + 6.0 * L * K + 3.0 * K + 5.0 + m * m;
    return delta * per_iter * m;
}

} // namespace mimopc
