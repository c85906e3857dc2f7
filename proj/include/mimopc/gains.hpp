#pragma once

#include <cmath>
#include <stdexcept>

#include "mimopc/scenario.hpp"

namespace mimopc {

enum class Precoder { MR, ZF };

/// MMSE channel-estimate variance:
///
///   gamma(l,i,k) = phat_{l,k} tau_p beta(l,i,k)^2
///                  / (sum_{l'} phat_{l',k} tau_p beta(l',i,k) + sigma_ul^2)
///
/// The denominator is the power of the despread pilot observation at BS i,
/// which sums over every cell l' reusing pilot k; that is what makes pilot
/// contamination shrink the estimate quality. Every entry lies in
/// (0, beta(l,i,k)].
inline Tensor3 compute_estimate_variance(const NetworkScenario &sc) {
    sc.validate();
    const int L = sc.cells();
    const int K = sc.users();
    const double tau_p = sc.config.pilot_symbols;
    Tensor3 gamma(L, L, K);
    for (int i = 0; i < L; ++i) {
        for (int k = 0; k < K; ++k) {
            double denom = sc.sigma_ul_sq;
            for (int lp = 0; lp < L; ++lp)
                denom += sc.pilot_power(lp, k) * tau_p * sc.beta(lp, i, k);
            for (int l = 0; l < L; ++l) {
                const double b = sc.beta(l, i, k);
                gamma(l, i, k) = sc.pilot_power(l, k) * tau_p * b * b / denom;
            }
        }
    }
    return gamma;
}

/// Precoder-dependent effective gains feeding every SINR expression.
/// MR: array gain G = M, non-coherent gain z = beta.
/// ZF: G = M - K, z = beta - gamma (estimated channels are nulled).
/// gamma depends only on pilots and beta, so it is computed once here and
/// shared by both schemes.
struct EffectiveGains {
    Precoder scheme = Precoder::ZF;
    double array_gain = 0.0; ///< G
    Tensor3 gamma;           ///< channel-estimate variances
    Tensor3 z_gain;          ///< non-coherent interference gains

    static EffectiveGains compute(const NetworkScenario &sc, Precoder scheme) {
        EffectiveGains g;
        g.scheme = scheme;
        g.gamma = compute_estimate_variance(sc);
        const int L = sc.cells();
        const int K = sc.users();
        g.z_gain = Tensor3(L, L, K);
        if (scheme == Precoder::MR) {
            g.array_gain = sc.config.antennas;
            g.z_gain.data() = sc.beta.data();
        } else {
            g.array_gain = sc.config.antennas - sc.config.users_per_cell;
            for (int l = 0; l < L; ++l)
                for (int i = 0; i < L; ++i)
                    for (int k = 0; k < K; ++k)
                        g.z_gain(l, i, k) = sc.beta(l, i, k) - g.gamma(l, i, k);
        }
        return g;
    }
};

/// DL transmit powers, watts.
struct PowerAllocation {
    Eigen::MatrixXd rho; ///< L x K

    static PowerAllocation zero(const ScenarioConfig &cfg) {
        return {Eigen::MatrixXd::Zero(cfg.cells, cfg.users_per_cell)};
    }
};

/// Closed-form effective SINR of user k in cell l:
///
///   G rho_{l,k} gamma(l,l,k)
///   -------------------------------------------------------------------
///   G sum_{i != l} rho_{i,k} gamma(l,i,k) + sum_{i,t} rho_{i,t} z(l,i,k)
///                                         + sigma_dl^2
///
/// The first denominator sum is the coherent interference from pilot-sharing
/// users; it carries the array gain G just like the desired signal.
inline double closed_form_sinr(const PowerAllocation &rho, const EffectiveGains &gains,
                               const NetworkScenario &sc, int l, int k) {
    const int L = sc.cells();
    const int K = sc.users();
    if (l < 0 || l >= L || k < 0 || k >= K) throw std::out_of_range("closed_form_sinr: bad index");
    const double G = gains.array_gain;
    double denom = sc.sigma_dl_sq;
    for (int i = 0; i < L; ++i) {
        if (i != l) denom += G * rho.rho(i, k) * gains.gamma(l, i, k);
        for (int t = 0; t < K; ++t) denom += rho.rho(i, t) * gains.z_gain(l, i, k);
    }
    return G * rho.rho(l, k) * gains.gamma(l, l, k) / denom;
}

/// Ergodic SE lower bound from an effective SINR:
/// (1 - tau_p/tau_c) log2(1 + sinr), b/s/Hz.
inline double se_from_sinr(double sinr, const ScenarioConfig &cfg) {
    const double prelog = 1.0 - static_cast<double>(cfg.pilot_symbols) / cfg.coherence_symbols;
    return prelog * std::log2(1.0 + sinr);
}

/// Linear SINR targets equivalent to the SE requirements.
struct SinrTargets {
    Eigen::MatrixXd xi_hat; ///< L x K, dimensionless
};

/// Converts each SE requirement xi to the SINR target
/// xi_hat = 2^(tau_c xi / (tau_c - tau_p)) - 1 (the inverse of se_from_sinr).
inline SinrTargets qos_to_sinr_target(const NetworkScenario &sc) {
    if (sc.config.pilot_symbols >= sc.config.coherence_symbols)
        throw std::invalid_argument("pilot_symbols must be below coherence_symbols");
    const double tau_c = sc.config.coherence_symbols;
    const double tau_p = sc.config.pilot_symbols;
    SinrTargets t;
    t.xi_hat = (sc.qos_se.array() * (tau_c / (tau_c - tau_p)))
                   .unaryExpr([](double e) { return std::exp2(e) - 1.0; })
                   .matrix();
    return t;
}

} // namespace mimopc
