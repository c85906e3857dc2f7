#pragma once

#include <stdexcept>
#include <vector>

#include "mimopc/montecarlo.hpp"
#include "mimopc/scenario.hpp"

namespace mimopc {

/// Geometry and statistics of random user placements. BSs sit on a
/// grid_x x grid_y rectangular grid wrapped onto a torus, so every cell sees
/// the same interference geometry and there are no network edges.
struct DropConfig {
    int grid_x = 2;
    int grid_y = 2;
    double bs_spacing_km = 0.5;       ///< distance between neighboring BSs
    double min_distance_km = 0.035;   ///< minimum BS-to-user access distance
    double pathloss_intercept_db = -148.1;
    double pathloss_exponent = 37.6;  ///< dB per decade of distance
    double shadow_std_db = 7.0;
    int antennas = 100;
    int users_per_cell = 10;
    int coherence_symbols = 200;
    double p_max_watts = 40.0;
    double pilot_power_watts = 0.2;
    double qos_se = 0.5;              ///< b/s/Hz required by every user
    double noise_dbm = -96.0;         ///< receiver noise power over the band

    int cells() const { return grid_x * grid_y; }

    void validate() const {
        if (grid_x < 1 || grid_y < 1) throw std::invalid_argument("empty BS grid");
        if (bs_spacing_km <= 0.0) throw std::invalid_argument("bs_spacing_km must be positive");
        if (min_distance_km <= 0.0) throw std::invalid_argument("min_distance_km must be positive");
        if (shadow_std_db < 0.0) throw std::invalid_argument("shadow_std_db must be nonnegative");
        if (antennas <= users_per_cell)
            throw std::invalid_argument("antennas must exceed users_per_cell");
    }
};

/// Shortest displacement between two coordinates on a circle of the given
/// period (the per-axis piece of the toroidal distance).
inline double wrap_delta(double a, double b, double period) {
    double d = std::fmod(std::abs(a - b), period);
    return std::min(d, period - d);
}

/// Toroidal distance between points on the wrap-around coverage area.
inline double torus_distance(double x1, double y1, double x2, double y2, double size_x,
                             double size_y) {
    const double dx = wrap_delta(x1, x2, size_x);
    const double dy = wrap_delta(y1, y2, size_y);
    return std::sqrt(dx * dx + dy * dy);
}

/// Distance-dependent part of the link gain in dB (shadowing excluded).
inline double pathloss_db(const DropConfig &cfg, double distance_km) {
    return cfg.pathloss_intercept_db - cfg.pathloss_exponent * std::log10(distance_km);
}

/// Draws one user placement and produces the full network scenario:
/// users are uniform over the torus subject to the minimum access distance,
/// each user is served by its strongest BS, and every link gain follows the
/// distance law beta[dB] = intercept - exponent log10(d_km) + shadowing.
inline NetworkScenario generate_drop(const DropConfig &cfg, std::uint64_t seed) {
    cfg.validate();
    const int L = cfg.cells();
    const int K = cfg.users_per_cell;
    const double size_x = cfg.grid_x * cfg.bs_spacing_km;
    const double size_y = cfg.grid_y * cfg.bs_spacing_km;

    GaussianSampler gauss(seed);
    std::mt19937_64 uni(seed ^ 0x9e3779b97f4a7c15ULL);
    // Users are uniform within the square cell of their serving BS (offsets
    // relative to the BS), so the serving link is always the geometrically
    // strongest one.
    std::uniform_real_distribution<double> ux(-0.5 * cfg.bs_spacing_km, 0.5 * cfg.bs_spacing_km);
    std::uniform_real_distribution<double> uy(-0.5 * cfg.bs_spacing_km, 0.5 * cfg.bs_spacing_km);

    std::vector<double> bs_x(L), bs_y(L);
    for (int gx = 0; gx < cfg.grid_x; ++gx)
        for (int gy = 0; gy < cfg.grid_y; ++gy) {
            const int l = gx * cfg.grid_y + gy;
            bs_x[l] = (gx + 0.5) * cfg.bs_spacing_km;
            bs_y[l] = (gy + 0.5) * cfg.bs_spacing_km;
        }

    NetworkScenario sc;
    sc.config = {L, K, cfg.antennas, cfg.coherence_symbols, K};
    sc.beta = Tensor3(L, L, K);
    sc.pilot_power = Eigen::MatrixXd::Constant(L, K, cfg.pilot_power_watts);
    const double noise_watts = dbm_to_watts(cfg.noise_dbm);
    sc.sigma_ul_sq = noise_watts;
    sc.sigma_dl_sq = noise_watts;
    sc.p_max = Eigen::VectorXd::Constant(L, cfg.p_max_watts);
    sc.qos_se = Eigen::MatrixXd::Constant(L, K, cfg.qos_se);

    for (int l = 0; l < L; ++l)
        for (int k = 0; k < K; ++k) {
            double x = 0.0, y = 0.0;
            do {
                x = bs_x[l] + ux(uni);
                y = bs_y[l] + uy(uni);
            } while (torus_distance(x, y, bs_x[l], bs_y[l], size_x, size_y) < cfg.min_distance_km);
            // Redraw the shadowing until the serving link carries the largest
            // gain, i.e. every user is served by its strongest BS. Without
            // this, independent shadowing regularly makes a cross link
            // dominate the serving link, which caps the achievable SINR of
            // the affected user below any practical target.
            bool serving_strongest = false;
            while (!serving_strongest) {
                for (int i = 0; i < L; ++i) {
                    const double d =
                        std::max(torus_distance(x, y, bs_x[i], bs_y[i], size_x, size_y),
                                 cfg.min_distance_km);
                    const double shadow = cfg.shadow_std_db * gauss.next();
                    sc.beta(l, i, k) = db_to_linear(pathloss_db(cfg, d) + shadow);
                }
                serving_strongest = true;
                for (int i = 0; i < L; ++i)
                    if (sc.beta(l, i, k) > sc.beta(l, l, k)) serving_strongest = false;
            }
        }
    return sc;
}

/// Flat key=value serialization of the drop settings.
inline void save_drop_config(const DropConfig &cfg, std::ostream &out) {
    out.precision(17);
    out << "grid_x = " << cfg.grid_x << "\n"
        << "grid_y = " << cfg.grid_y << "\n"
        << "bs_spacing_km = " << cfg.bs_spacing_km << "\n"
        << "min_distance_km = " << cfg.min_distance_km << "\n"
        << "pathloss_intercept_db = " << cfg.pathloss_intercept_db << "\n"
        << "pathloss_exponent = " << cfg.pathloss_exponent << "\n"
        << "shadow_std_db = " << cfg.shadow_std_db << "\n"
        << "antennas = " << cfg.antennas << "\n"
        << "users_per_cell = " << cfg.users_per_cell << "\n"
        << "coherence_symbols = " << cfg.coherence_symbols << "\n"
        << "p_max_watts = " << cfg.p_max_watts << "\n"
        << "pilot_power_watts = " << cfg.pilot_power_watts << "\n"
        << "qos_se = " << cfg.qos_se << "\n"
        << "noise_dbm = " << cfg.noise_dbm << "\n";
}

inline DropConfig load_drop_config(std::istream &in) {
    DropConfig cfg;
    std::string key, eq;
    double value = 0.0;
    while (in >> key >> eq >> value) {
        if (eq != "=") throw std::invalid_argument("malformed drop config line near " + key);
        if (key == "grid_x") cfg.grid_x = static_cast<int>(value);
        else if (key == "grid_y") cfg.grid_y = static_cast<int>(value);
        else if (key == "bs_spacing_km") cfg.bs_spacing_km = value;
        else if (key == "min_distance_km") cfg.min_distance_km = value;
        else if (key == "pathloss_intercept_db") cfg.pathloss_intercept_db = value;
        else if (key == "pathloss_exponent") cfg.pathloss_exponent = value;
        else if (key == "shadow_std_db") cfg.shadow_std_db = value;
        else if (key == "antennas") cfg.antennas = static_cast<int>(value);
        else if (key == "users_per_cell") cfg.users_per_cell = static_cast<int>(value);
        else if (key == "coherence_symbols") cfg.coherence_symbols = static_cast<int>(value);
        else if (key == "p_max_watts") cfg.p_max_watts = value;
        else if (key == "pilot_power_watts") cfg.pilot_power_watts = value;
        else if (key == "qos_se") cfg.qos_se = value;
        else if (key == "noise_dbm") cfg.noise_dbm = value;
        else throw std::invalid_argument("unknown drop config key " + key);
    }
    return cfg;
}

} // namespace mimopc
