#pragma once

#include <ostream>
#include <stdexcept>

namespace mimopc {

/// Where the power-control optimization runs and what travels over the
/// backhaul to make that possible.
enum class Strategy { Centralized, BasicDistributed, DualDecomposition };

inline const char *to_string(Strategy s) {
    switch (s) {
    case Strategy::Centralized: return "centralized";
    case Strategy::BasicDistributed: return "basic";
    default: return "dual";
    }
}

/// Optimization-variable and exchanged-parameter tallies of one strategy.
///
/// Centralized: the core network gathers beta and gamma for every link
/// (2KL^2) plus the KL QoS targets, and returns KL powers. Variables: the
/// KL powers of the network LP.
///
/// Basic distributed: every BS gathers the foreign statistics it misses
/// (2K(L-1)^2 links plus K(L-1) targets) and solves the full LP locally; no
/// solution needs to be sent back. Variables: KL per BS, KL^2 in total.
///
/// Dual decomposition: each of the N coordination rounds moves 2K(L-1)
/// consistency values from each of the L-1 non-master BSs to the master and
/// the same number of updated multipliers back (4K(L-1)^2 per round), on
/// top of a one-off exchange of 2K(L-1) statistics per BS pair direction
/// (2K(L-1)L). Variables: K(2L-1)+1 per BS subproblem, L(K(2L-1)+1) =
/// 2KL^2 - KL + L in total.
struct SignalingLedger {
    Strategy strategy = Strategy::Centralized;
    long long optimization_variables = 0;
    long long exchanged_parameters = 0;
};

inline SignalingLedger count_signaling(Strategy strategy, int L, int K, int N = 1) {
    const long long Ll = L, Kl = K, Nl = N;
    SignalingLedger out;
    out.strategy = strategy;
    switch (strategy) {
    case Strategy::Centralized:
        out.optimization_variables = Kl * Ll;
        out.exchanged_parameters = 2 * Kl * Ll * Ll + 2 * Kl * Ll;
        break;
    case Strategy::BasicDistributed:
        out.optimization_variables = Kl * Ll * Ll;
        out.exchanged_parameters = 2 * Kl * (Ll - 1) * (Ll - 1) * Ll + Kl * (Ll - 1) * Ll;
        break;
    case Strategy::DualDecomposition:
        if (N < 1) throw std::invalid_argument("dual decomposition needs N >= 1");
        out.optimization_variables = 2 * Kl * Ll * Ll - Kl * Ll + Ll;
        out.exchanged_parameters = 4 * Kl * (Ll - 1) * (Ll - 1) * Nl + 2 * Kl * (Ll - 1) * Ll;
        break;
    }
    return out;
}

/// CSV table for all three strategies at the measured iteration count.
inline void export_signaling_csv(int L, int K, int N, std::ostream &out) {
    out << "strategy,opt_variables,exchanged_parameters,iterations\n";
    for (Strategy s :
         {Strategy::Centralized, Strategy::BasicDistributed, Strategy::DualDecomposition}) {
        const SignalingLedger ledger = count_signaling(s, L, K, N);
        out << to_string(s) << "," << ledger.optimization_variables << ","
            << ledger.exchanged_parameters << ","
            << (s == Strategy::DualDecomposition ? N : 1) << "\n";
    }
}

} // namespace mimopc
