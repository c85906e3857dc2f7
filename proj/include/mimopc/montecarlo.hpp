#pragma once

#include <complex>
#include <ostream>
#include <random>
#include <vector>

#include "mimopc/gains.hpp"
#include "mimopc/scenario.hpp"

namespace mimopc {

/// Standard-normal sampler with an explicitly pinned algorithm (64-bit
/// Mersenne Twister + Box-Muller), so that a seed reproduces the identical
/// stream on every platform and standard library.
class GaussianSampler {
  public:
    explicit GaussianSampler(std::uint64_t seed) : eng_(seed) {}

    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // u1 in (0, 1] keeps the logarithm finite.
        const double u1 =
            (static_cast<double>(eng_() >> 11) + 1.0) / 9007199254740993.0;
        const double u2 = static_cast<double>(eng_() >> 11) / 9007199254740992.0;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phi = 2.0 * M_PI * u2;
        spare_ = r * std::sin(phi);
        has_spare_ = true;
        return r * std::cos(phi);
    }

    /// Circularly symmetric complex Gaussian with the given variance
    /// (total over both quadratures).
    std::complex<double> next_complex(double variance) {
        const double s = std::sqrt(0.5 * variance);
        const double re = next();
        const double im = next();
        return {s * re, s * im};
    }

  private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// One small-scale fading realization: channels and their MMSE estimates for
/// every (serving BS l, user cell i, user k) link. h[l] and h_hat[l] are
/// M x (L K) with column i * K + k holding the channel from BS l to user k
/// of cell i.
struct ChannelRealization {
    std::vector<Eigen::MatrixXcd> h;
    std::vector<Eigen::MatrixXcd> h_hat;
};

/// Draws channels and runs the pilot-based MMSE estimator. The despread
/// pilot observation for user slot k at BS l is
///   y = tau_p sum_i sqrt(phat_{i,k}) h_{i,k}^l + (pilot-combined noise),
/// whose noise has variance tau_p sigma_ul^2 per antenna; multiplying by
/// sqrt(phat_{i,k}) beta_{i,k}^l / (tau_p sum phat beta + sigma_ul^2) gives
/// the MMSE estimate of each contributing channel.
inline ChannelRealization draw_realization(const NetworkScenario &sc, GaussianSampler &rng) {
    const int L = sc.cells();
    const int K = sc.users();
    const int M = sc.config.antennas;
    const double tau_p = sc.config.pilot_symbols;

    ChannelRealization out;
    out.h.assign(L, Eigen::MatrixXcd(M, L * K));
    out.h_hat.assign(L, Eigen::MatrixXcd(M, L * K));

    for (int l = 0; l < L; ++l)
        for (int i = 0; i < L; ++i)
            for (int k = 0; k < K; ++k) {
                const double b = sc.beta(i, l, k);
                // beta(i, l, k): user k of cell i seen from BS l.
                for (int a = 0; a < M; ++a) out.h[l](a, i * K + k) = rng.next_complex(b);
            }

    for (int l = 0; l < L; ++l) {
        for (int k = 0; k < K; ++k) {
            Eigen::VectorXcd y = Eigen::VectorXcd::Zero(M);
            for (int i = 0; i < L; ++i)
                y += tau_p * std::sqrt(sc.pilot_power(i, k)) * out.h[l].col(i * K + k);
            for (int a = 0; a < M; ++a) y(a) += rng.next_complex(tau_p * sc.sigma_ul_sq);
            double denom = sc.sigma_ul_sq;
            for (int i = 0; i < L; ++i) denom += sc.pilot_power(i, k) * tau_p * sc.beta(i, l, k);
            for (int i = 0; i < L; ++i)
                out.h_hat[l].col(i * K + k) =
                    (std::sqrt(sc.pilot_power(i, k)) * sc.beta(i, l, k) / denom) * y;
        }
    }
    return out;
}

/// Unit-average-power precoding vectors of BS l for its K local users,
/// normalized by the analytical expectations (sqrt(M gamma) for MR and
/// 1/sqrt((M-K) gamma_k) for the pseudo-inverse columns of ZF).
inline Eigen::MatrixXcd build_precoders(const NetworkScenario &sc, const EffectiveGains &gains,
                                        const ChannelRealization &re, int l, Precoder scheme) {
    const int K = sc.users();
    const int M = sc.config.antennas;
    Eigen::MatrixXcd local(M, K);
    for (int k = 0; k < K; ++k) local.col(k) = re.h_hat[l].col(l * K + k);

    Eigen::MatrixXcd w(M, K);
    if (scheme == Precoder::MR) {
        for (int k = 0; k < K; ++k)
            w.col(k) = local.col(k) / std::sqrt(M * gains.gamma(l, l, k));
    } else {
        const Eigen::MatrixXcd pinv =
            local * (local.adjoint() * local).inverse();
        for (int k = 0; k < K; ++k)
            w.col(k) = pinv.col(k) * std::sqrt((M - K) * gains.gamma(l, l, k));
    }
    return w;
}

/// One moment of the SE bound compared against its analytic value:
/// "mean_gain" is E{(h_{l,k}^l)^H w_{l,k}} (analytic sqrt(G gamma)),
/// "power_gain" is E{|(h_{l,k}^i)^H w_{i,t}|^2} (analytic z + G gamma when
/// the users share a pilot). z is the deviation in standard errors.
struct TermRecord {
    int l = 0, k = 0, i = 0, t = 0;
    const char *term = "";
    double analytic = 0.0;
    double empirical = 0.0;
    double std_error = 0.0;
    double z_score = 0.0;
};

/// Side-by-side comparison of the simulated and closed-form effective SINR
/// and SE for a fixed power allocation.
struct MonteCarloReport {
    int realizations = 0;
    std::uint64_t seed = 0;
    Eigen::MatrixXd sinr_mc, sinr_closed; ///< L x K
    Eigen::MatrixXd se_mc, se_closed;
    double max_rel_error = 0.0; ///< worst relative SINR deviation
    std::vector<TermRecord> terms;
    double max_abs_z = 0.0; ///< worst term deviation in standard errors
};

/// Estimates the hardening-bound SINR of every user by simulation: the
/// expectations defining the desired signal, the interference powers and the
/// beamforming-gain uncertainty are replaced by sample averages over
/// independent small-scale fading realizations, then compared against the
/// closed form evaluated from the large-scale coefficients alone.
inline MonteCarloReport validate_closed_form(const NetworkScenario &sc,
                                             const PowerAllocation &rho, Precoder scheme,
                                             int realizations, std::uint64_t seed) {
    const int L = sc.cells();
    const int K = sc.users();
    const EffectiveGains gains = EffectiveGains::compute(sc, scheme);
    GaussianSampler rng(seed);

    // Accumulators per (victim l,k; transmitter i,t): the complex mean of
    // g = (h_{l,k}^i)^H w_{i,t}, the variance of its real part, and the
    // first two moments of |g|^2 for standard errors.
    std::vector<Eigen::MatrixXcd> mean_gain(L * K, Eigen::MatrixXcd::Zero(L, K));
    std::vector<Eigen::MatrixXd> mean_re_sq(L * K, Eigen::MatrixXd::Zero(L, K));
    std::vector<Eigen::MatrixXd> power_gain(L * K, Eigen::MatrixXd::Zero(L, K));
    std::vector<Eigen::MatrixXd> power_sq(L * K, Eigen::MatrixXd::Zero(L, K));

    for (int r = 0; r < realizations; ++r) {
        const ChannelRealization re = draw_realization(sc, rng);
        for (int i = 0; i < L; ++i) {
            const Eigen::MatrixXcd w = build_precoders(sc, gains, re, i, scheme);
            for (int l = 0; l < L; ++l)
                for (int k = 0; k < K; ++k) {
                    const auto channel = re.h[i].col(l * K + k);
                    for (int t = 0; t < K; ++t) {
                        const std::complex<double> g = channel.dot(w.col(t));
                        mean_gain[l * K + k](i, t) += g;
                        mean_re_sq[l * K + k](i, t) += g.real() * g.real();
                        power_gain[l * K + k](i, t) += std::norm(g);
                        power_sq[l * K + k](i, t) += std::norm(g) * std::norm(g);
                    }
                }
        }
    }

    MonteCarloReport rep;
    rep.realizations = realizations;
    rep.seed = seed;
    rep.sinr_mc.resize(L, K);
    rep.sinr_closed.resize(L, K);
    rep.se_mc.resize(L, K);
    rep.se_closed.resize(L, K);

    for (int l = 0; l < L; ++l)
        for (int k = 0; k < K; ++k) {
            const Eigen::MatrixXcd &m = mean_gain[l * K + k];
            const Eigen::MatrixXd &p = power_gain[l * K + k];
            const std::complex<double> desired = m(l, k) / static_cast<double>(realizations);
            const double signal = rho.rho(l, k) * std::norm(desired);
            double denom = sc.sigma_dl_sq - signal;
            for (int i = 0; i < L; ++i)
                for (int t = 0; t < K; ++t)
                    denom += rho.rho(i, t) * p(i, t) / static_cast<double>(realizations);
            rep.sinr_mc(l, k) = denom > 0.0 ? signal / denom : std::numeric_limits<double>::infinity();
            rep.sinr_closed(l, k) = closed_form_sinr(rho, gains, sc, l, k);
            rep.se_mc(l, k) = se_from_sinr(rep.sinr_mc(l, k), sc.config);
            rep.se_closed(l, k) = se_from_sinr(rep.sinr_closed(l, k), sc.config);
            const double scale = std::max(rep.sinr_closed(l, k), 1e-12);
            rep.max_rel_error = std::max(rep.max_rel_error,
                                         std::abs(rep.sinr_mc(l, k) - rep.sinr_closed(l, k)) / scale);
        }

    // Term-by-term records with standard errors of the sample means.
    const double n = realizations;
    for (int l = 0; l < L; ++l)
        for (int k = 0; k < K; ++k) {
            {
                TermRecord rec;
                rec.l = l;
                rec.k = k;
                rec.i = l;
                rec.t = k;
                rec.term = "mean_gain";
                rec.analytic = std::sqrt(gains.array_gain * gains.gamma(l, l, k));
                const double mean_re = mean_gain[l * K + k](l, k).real() / n;
                const double var_re =
                    std::max(0.0, mean_re_sq[l * K + k](l, k) / n - mean_re * mean_re);
                rec.empirical = mean_re;
                rec.std_error = std::sqrt(var_re / n);
                rec.z_score = (rec.empirical - rec.analytic) / std::max(rec.std_error, 1e-300);
                rep.terms.push_back(rec);
            }
            for (int i = 0; i < L; ++i)
                for (int t = 0; t < K; ++t) {
                    TermRecord rec;
                    rec.l = l;
                    rec.k = k;
                    rec.i = i;
                    rec.t = t;
                    rec.term = "power_gain";
                    rec.analytic = gains.z_gain(l, i, k) +
                                   (t == k ? gains.array_gain * gains.gamma(l, i, k) : 0.0);
                    const double mean_p = power_gain[l * K + k](i, t) / n;
                    const double var_p =
                        std::max(0.0, power_sq[l * K + k](i, t) / n - mean_p * mean_p);
                    rec.empirical = mean_p;
                    rec.std_error = std::sqrt(var_p / n);
                    rec.z_score = (rec.empirical - rec.analytic) / std::max(rec.std_error, 1e-300);
                    rep.terms.push_back(rec);
                }
        }
    for (const TermRecord &rec : rep.terms)
        rep.max_abs_z = std::max(rep.max_abs_z, std::abs(rec.z_score));
    return rep;
}

/// CSV term report: one row per compared moment.
inline void export_term_csv(const MonteCarloReport &rep, std::ostream &out) {
    out << "l,k,i,t,term,analytic,empirical,std_error,z_score\n";
    out.precision(17);
    for (const TermRecord &rec : rep.terms)
        out << rec.l << "," << rec.k << "," << rec.i << "," << rec.t << "," << rec.term << ","
            << rec.analytic << "," << rec.empirical << "," << rec.std_error << ","
            << rec.z_score << "\n";
}

/// CSV report, one row per user.
inline void export_validation_csv(const MonteCarloReport &rep, std::ostream &out) {
    out << "l,k,sinr_mc,sinr_closed,se_mc,se_closed,rel_error\n";
    out.precision(17);
    for (Eigen::Index l = 0; l < rep.sinr_mc.rows(); ++l)
        for (Eigen::Index k = 0; k < rep.sinr_mc.cols(); ++k) {
            const double scale = std::max(rep.sinr_closed(l, k), 1e-12);
            out << l << "," << k << "," << rep.sinr_mc(l, k) << "," << rep.sinr_closed(l, k)
                << "," << rep.se_mc(l, k) << "," << rep.se_closed(l, k) << ","
                << std::abs(rep.sinr_mc(l, k) - rep.sinr_closed(l, k)) / scale << "\n";
        }
}

} // namespace mimopc
