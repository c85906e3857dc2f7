#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "mimopc/tensor.hpp"

namespace mimopc {

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

/// System dimensions. tau_p = K throughout (full pilot reuse across cells).
struct ScenarioConfig {
    int cells = 0;          ///< L
    int users_per_cell = 0; ///< K
    int antennas = 0;       ///< M
    int coherence_symbols = 0; ///< tau_c
    int pilot_symbols = 0;     ///< tau_p

    void validate() const {
        if (cells < 1) throw std::invalid_argument("cells must be >= 1");
        if (users_per_cell < 1) throw std::invalid_argument("users_per_cell must be >= 1");
        if (antennas <= users_per_cell)
            throw std::invalid_argument("antennas must exceed users_per_cell");
        if (pilot_symbols != users_per_cell)
            throw std::invalid_argument("pilot_symbols must equal users_per_cell");
        if (pilot_symbols >= coherence_symbols)
            throw std::invalid_argument("pilot_symbols must be below coherence_symbols");
    }
};

/// All large-scale quantities of one network snapshot. Everything is stored
/// in linear scale (gains dimensionless, powers in watts); dB conversion
/// happens only at I/O boundaries.
struct NetworkScenario {
    ScenarioConfig config;
    Tensor3 beta;             ///< beta(l,i,k): gain user k of cell i -> BS l
    Eigen::MatrixXd pilot_power; ///< L x K, watts
    double sigma_ul_sq = 0.0;    ///< UL noise power, watts
    double sigma_dl_sq = 0.0;    ///< DL noise power, watts
    Eigen::VectorXd p_max;       ///< L, per-BS DL budget, watts
    Eigen::MatrixXd qos_se;      ///< L x K, required SE in b/s/Hz

    int cells() const { return config.cells; }
    int users() const { return config.users_per_cell; }

    void validate() const {
        config.validate();
        const auto L = static_cast<std::size_t>(config.cells);
        const auto K = static_cast<std::size_t>(config.users_per_cell);
        if (beta.dim0() != L || beta.dim1() != L || beta.dim2() != K)
            throw std::invalid_argument("beta must be L x L x K");
        if (pilot_power.rows() != config.cells || pilot_power.cols() != config.users_per_cell)
            throw std::invalid_argument("pilot_power must be L x K");
        if (p_max.size() != config.cells) throw std::invalid_argument("p_max must have L entries");
        if (qos_se.rows() != config.cells || qos_se.cols() != config.users_per_cell)
            throw std::invalid_argument("qos_se must be L x K");
        for (double b : beta.data())
            if (!(b > 0.0)) throw std::invalid_argument("beta entries must be positive");
        if ((pilot_power.array() <= 0.0).any())
            throw std::invalid_argument("pilot powers must be positive");
        if (!(sigma_ul_sq > 0.0) || !(sigma_dl_sq > 0.0))
            throw std::invalid_argument("noise powers must be positive");
        if ((p_max.array() <= 0.0).any())
            throw std::invalid_argument("power budgets must be positive");
        if ((qos_se.array() < 0.0).any())
            throw std::invalid_argument("QoS targets must be nonnegative");
    }

    /// Copy with all channel gains and noise powers expressed in units of the
    /// DL noise power. Closed-form SINRs and optimal power allocations are
    /// unchanged by this rescaling, but it puts solver data and the
    /// consistency variables of the distributed algorithm on an O(1) scale.
    NetworkScenario noise_normalized() const {
        NetworkScenario out = *this;
        const double c = 1.0 / sigma_dl_sq;
        for (double &b : out.beta.data()) b *= c;
        out.sigma_ul_sq = sigma_ul_sq * c;
        out.sigma_dl_sq = 1.0;
        return out;
    }
};

namespace detail {

inline std::map<std::string, std::string> parse_key_values(std::istream &in) {
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

inline std::vector<double> parse_numbers(const std::string &s) {
    std::vector<double> out;
    std::istringstream iss(s);
    double v;
    while (iss >> v) out.push_back(v);
    return out;
}

} // namespace detail

/// Flat key = value serialization; array values are space-separated in
/// row-major order.
inline void save_scenario(const NetworkScenario &sc, std::ostream &out) {
    out.precision(17);
    out << "cells = " << sc.config.cells << "\n";
    out << "users_per_cell = " << sc.config.users_per_cell << "\n";
    out << "antennas = " << sc.config.antennas << "\n";
    out << "coherence_symbols = " << sc.config.coherence_symbols << "\n";
    out << "pilot_symbols = " << sc.config.pilot_symbols << "\n";
    out << "sigma_ul_sq = " << sc.sigma_ul_sq << "\n";
    out << "sigma_dl_sq = " << sc.sigma_dl_sq << "\n";
    auto write_range = [&out](const char *key, auto begin, auto end) {
        out << key << " =";
        for (auto it = begin; it != end; ++it) out << " " << *it;
        out << "\n";
    };
    auto write_matrix = [&out](const char *key, const Eigen::MatrixXd &m) {
        out << key << " =";
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) out << " " << m(r, c);
        out << "\n";
    };
    write_range("beta", sc.beta.data().begin(), sc.beta.data().end());
    write_matrix("pilot_power", sc.pilot_power);
    write_range("p_max", sc.p_max.data(), sc.p_max.data() + sc.p_max.size());
    write_matrix("qos_se", sc.qos_se);
}

inline NetworkScenario load_scenario(std::istream &in) {
    const auto kv = detail::parse_key_values(in);
    auto require = [&kv](const std::string &key) -> const std::string & {
        auto it = kv.find(key);
        if (it == kv.end()) throw std::runtime_error("scenario file missing key: " + key);
        return it->second;
    };
    NetworkScenario sc;
    sc.config.cells = std::stoi(require("cells"));
    sc.config.users_per_cell = std::stoi(require("users_per_cell"));
    sc.config.antennas = std::stoi(require("antennas"));
    sc.config.coherence_symbols = std::stoi(require("coherence_symbols"));
    sc.config.pilot_symbols = std::stoi(require("pilot_symbols"));
    sc.sigma_ul_sq = std::stod(require("sigma_ul_sq"));
    sc.sigma_dl_sq = std::stod(require("sigma_dl_sq"));

    const int L = sc.config.cells;
    const int K = sc.config.users_per_cell;
    const auto beta = detail::parse_numbers(require("beta"));
    if (beta.size() != static_cast<std::size_t>(L) * L * K)
        throw std::runtime_error("beta has wrong length");
    sc.beta = Tensor3(L, L, K);
    sc.beta.data() = beta;

    auto fill_matrix = [&](const char *key, Eigen::MatrixXd &m) {
        const auto v = detail::parse_numbers(require(key));
        if (v.size() != static_cast<std::size_t>(L) * K)
            throw std::runtime_error(std::string(key) + " has wrong length");
        m.resize(L, K);
        for (int r = 0; r < L; ++r)
            for (int c = 0; c < K; ++c) m(r, c) = v[static_cast<std::size_t>(r) * K + c];
    };
    fill_matrix("pilot_power", sc.pilot_power);
    fill_matrix("qos_se", sc.qos_se);

    const auto pmax = detail::parse_numbers(require("p_max"));
    if (pmax.size() != static_cast<std::size_t>(L)) throw std::runtime_error("p_max has wrong length");
    sc.p_max = Eigen::Map<const Eigen::VectorXd>(pmax.data(), L);

    sc.validate();
    return sc;
}

/// CSV export of a rank-3 gain tensor with header `l,i,k,value`.
inline void export_tensor_csv(const Tensor3 &t, std::ostream &out) {
    out.precision(17);
    out << "l,i,k,value\n";
    for (std::size_t l = 0; l < t.dim0(); ++l)
        for (std::size_t i = 0; i < t.dim1(); ++i)
            for (std::size_t k = 0; k < t.dim2(); ++k)
                out << l << "," << i << "," << k << "," << t(l, i, k) << "\n";
}

inline Tensor3 import_tensor_csv(std::istream &in, std::size_t d0, std::size_t d1, std::size_t d2) {
    Tensor3 t(d0, d1, d2);
    std::string line;
    std::getline(in, line); // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream iss(line);
        std::size_t l, i, k;
        char comma;
        double v;
        iss >> l >> comma >> i >> comma >> k >> comma >> v;
        t(l, i, k) = v;
    }
    return t;
}

} // namespace mimopc
