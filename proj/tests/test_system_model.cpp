#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "mimopc/gains.hpp"
#include "mimopc/scenario.hpp"

using namespace mimopc;

namespace {

NetworkScenario make_scenario(int L, int K, int M, double beta_fill = 1.0) {
    NetworkScenario sc;
    sc.config = {L, K, M, 200, K};
    sc.beta = Tensor3(L, L, K, beta_fill);
    sc.pilot_power = Eigen::MatrixXd::Constant(L, K, 1.0 / K); // phat * tau_p = 1
    sc.sigma_ul_sq = 1.0;
    sc.sigma_dl_sq = 1.0;
    sc.p_max = Eigen::VectorXd::Constant(L, 10.0);
    sc.qos_se = Eigen::MatrixXd::Constant(L, K, 0.5);
    return sc;
}

NetworkScenario random_scenario(int L, int K, int M, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.1, 2.0);
    NetworkScenario sc = make_scenario(L, K, M);
    for (double &b : sc.beta.data()) b = unif(rng);
    return sc;
}

} // namespace

TEST_CASE("estimate variance matches the closed form on unit cases") {
    // L=1, beta=1, phat*tau_p=1, sigma^2=1 -> gamma = 1/2.
    auto sc = make_scenario(1, 1, 4);
    auto gamma = compute_estimate_variance(sc);
    CHECK(gamma(0, 0, 0) == Catch::Approx(0.5).epsilon(1e-12));

    // Two cells sharing a pilot, symmetric, noiseless: gamma = beta/2.
    auto sc2 = make_scenario(2, 1, 4);
    sc2.sigma_ul_sq = 1e-14;
    auto gamma2 = compute_estimate_variance(sc2);
    for (int l = 0; l < 2; ++l)
        for (int i = 0; i < 2; ++i) CHECK(gamma2(l, i, 0) == Catch::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("noiseless single cell estimate variance approaches beta") {
    auto sc = make_scenario(1, 1, 4);
    sc.sigma_ul_sq = 1e-15;
    auto gamma = compute_estimate_variance(sc);
    CHECK(gamma(0, 0, 0) == Catch::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("gamma is bounded by beta with positive entries") {
    auto sc = random_scenario(3, 2, 8, 7);
    auto gamma = compute_estimate_variance(sc);
    for (int l = 0; l < 3; ++l)
        for (int i = 0; i < 3; ++i)
            for (int k = 0; k < 2; ++k) {
                CHECK(gamma(l, i, k) > 0.0);
                CHECK(gamma(l, i, k) <= sc.beta(l, i, k));
            }
}

TEST_CASE("ZF z gains equal beta minus gamma and stay nonnegative") {
    auto sc = random_scenario(3, 2, 8, 11);
    auto gains = EffectiveGains::compute(sc, Precoder::ZF);
    CHECK(gains.array_gain == 6.0);
    for (int l = 0; l < 3; ++l)
        for (int i = 0; i < 3; ++i)
            for (int k = 0; k < 2; ++k) {
                CHECK(gains.z_gain(l, i, k) ==
                      Catch::Approx(sc.beta(l, i, k) - gains.gamma(l, i, k)).margin(1e-15));
                CHECK(gains.z_gain(l, i, k) >= 0.0);
            }

    auto mr = EffectiveGains::compute(sc, Precoder::MR);
    CHECK(mr.array_gain == 8.0);
    for (std::size_t i = 0; i < mr.z_gain.size(); ++i)
        CHECK(mr.z_gain.data()[i] == sc.beta.data()[i]);
}

TEST_CASE("closed-form SINR basics") {
    auto sc = make_scenario(1, 1, 4);
    auto gains = EffectiveGains::compute(sc, Precoder::ZF);

    auto rho = PowerAllocation::zero(sc.config);
    CHECK(closed_form_sinr(rho, gains, sc, 0, 0) == 0.0);

    // Single cell, K=1, ZF: SINR = (M-1) rho gamma / (rho (beta-gamma) + sigma^2).
    rho.rho(0, 0) = 2.0;
    const double g = gains.gamma(0, 0, 0);
    const double expected = 3.0 * 2.0 * g / (2.0 * (1.0 - g) + 1.0);
    CHECK(closed_form_sinr(rho, gains, sc, 0, 0) == Catch::Approx(expected).epsilon(1e-12));

    CHECK_THROWS_AS(closed_form_sinr(rho, gains, sc, 1, 0), std::out_of_range);
}

TEST_CASE("closed-form SINR matches a term-by-term summation oracle") {
    auto sc = random_scenario(2, 3, 8, 23);
    auto gains = EffectiveGains::compute(sc, Precoder::ZF);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unif(0.0, 3.0);
    PowerAllocation rho{Eigen::MatrixXd::NullaryExpr(2, 3, [&](auto, auto) { return unif(rng); })};

    for (int l = 0; l < 2; ++l)
        for (int k = 0; k < 3; ++k) {
            // Independent evaluation: accumulate each interference term separately.
            const double G = gains.array_gain;
            double coherent = 0.0, noncoherent = 0.0;
            for (int i = 0; i < 2; ++i) {
                if (i != l) coherent += G * rho.rho(i, k) * gains.gamma(l, i, k);
                for (int t = 0; t < 3; ++t) noncoherent += rho.rho(i, t) * gains.z_gain(l, i, k);
            }
            const double oracle =
                G * rho.rho(l, k) * gains.gamma(l, l, k) / (coherent + noncoherent + sc.sigma_dl_sq);
            CHECK(closed_form_sinr(rho, gains, sc, l, k) == Catch::Approx(oracle).epsilon(1e-12));
        }
}

TEST_CASE("SINR is monotone in own power and in interference") {
    auto sc = random_scenario(2, 2, 8, 31);
    auto gains = EffectiveGains::compute(sc, Precoder::ZF);
    PowerAllocation rho{Eigen::MatrixXd::Constant(2, 2, 1.0)};
    const double base = closed_form_sinr(rho, gains, sc, 0, 0);
    auto up = rho;
    up.rho(0, 0) += 0.5;
    CHECK(closed_form_sinr(up, gains, sc, 0, 0) > base);
    auto other = rho;
    other.rho(1, 1) += 0.5;
    CHECK(closed_form_sinr(other, gains, sc, 0, 0) <= base);
}

TEST_CASE("SINR is invariant to a common scaling of powers and noise") {
    auto sc = random_scenario(2, 2, 8, 41);
    auto gains = EffectiveGains::compute(sc, Precoder::MR);
    PowerAllocation rho{Eigen::MatrixXd::Constant(2, 2, 0.7)};
    const double base = closed_form_sinr(rho, gains, sc, 1, 0);
    auto scaled = sc;
    scaled.sigma_dl_sq *= 13.0;
    PowerAllocation rho2{rho.rho * 13.0};
    CHECK(closed_form_sinr(rho2, gains, scaled, 1, 0) == Catch::Approx(base).epsilon(1e-12));
}

TEST_CASE("SE conversion and its inverse") {
    ScenarioConfig cfg{1, 10, 32, 200, 10};
    CHECK(se_from_sinr(0.0, cfg) == 0.0);
    CHECK(se_from_sinr(1.0, cfg) == Catch::Approx(0.95).epsilon(1e-12));

    auto sc = make_scenario(2, 2, 8);
    sc.config.coherence_symbols = 200;
    auto targets = qos_to_sinr_target(sc);
    // xi = 0.5, tau_c = 200, tau_p = 2 here; recompute directly.
    const double expect = std::exp2(200.0 * 0.5 / 198.0) - 1.0;
    CHECK(targets.xi_hat(0, 0) == Catch::Approx(expect).epsilon(1e-12));

    // Round trip: se(sinr_target(xi)) == xi for every entry.
    for (int l = 0; l < 2; ++l)
        for (int k = 0; k < 2; ++k)
            CHECK(se_from_sinr(targets.xi_hat(l, k), sc.config) ==
                  Catch::Approx(sc.qos_se(l, k)).margin(1e-12));

    sc.qos_se.setZero();
    auto zero = qos_to_sinr_target(sc);
    CHECK(zero.xi_hat.isZero(0.0));
}

TEST_CASE("documented target values from the conversion formula") {
    NetworkScenario sc = make_scenario(1, 1, 4);
    sc.config.coherence_symbols = 200;
    sc.config.pilot_symbols = 1;
    sc.qos_se.setConstant(1.0);
    auto t = qos_to_sinr_target(sc);
    CHECK(t.xi_hat(0, 0) == Catch::Approx(std::exp2(200.0 / 199.0) - 1.0).epsilon(1e-12));
    CHECK(t.xi_hat(0, 0) == Catch::Approx(1.0070).epsilon(1e-3));
}

TEST_CASE("scenario round-trips through the flat text format") {
    auto sc = random_scenario(3, 2, 8, 99);
    std::stringstream buf;
    save_scenario(sc, buf);
    auto back = load_scenario(buf);
    CHECK(back.config.cells == sc.config.cells);
    CHECK(back.beta == sc.beta);
    CHECK(back.pilot_power.isApprox(sc.pilot_power));
    CHECK(back.p_max.isApprox(sc.p_max));
    CHECK(back.qos_se.isApprox(sc.qos_se));
}

TEST_CASE("gain tensors round-trip through CSV") {
    auto sc = random_scenario(2, 2, 8, 123);
    auto gamma = compute_estimate_variance(sc);
    std::stringstream buf;
    export_tensor_csv(gamma, buf);
    auto back = import_tensor_csv(buf, 2, 2, 2);
    CHECK(back == gamma);
}

TEST_CASE("scenario validation rejects malformed inputs") {
    auto sc = make_scenario(2, 2, 8);
    sc.beta(0, 0, 0) = -1.0;
    CHECK_THROWS_AS(sc.validate(), std::invalid_argument);

    auto sc2 = make_scenario(2, 2, 8);
    sc2.config.pilot_symbols = 300;
    sc2.config.coherence_symbols = 200;
    CHECK_THROWS_AS(sc2.validate(), std::invalid_argument);

    ScenarioConfig bad{2, 4, 4, 200, 4}; // M == K
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("noise normalization preserves SINR") {
    auto sc = random_scenario(2, 2, 8, 55);
    sc.sigma_ul_sq = 3.2e-13;
    sc.sigma_dl_sq = 3.2e-13;
    for (double &b : sc.beta.data()) b *= 1e-12;
    auto gains = EffectiveGains::compute(sc, Precoder::ZF);
    PowerAllocation rho{Eigen::MatrixXd::Constant(2, 2, 0.05)};
    const double raw = closed_form_sinr(rho, gains, sc, 0, 1);

    auto norm = sc.noise_normalized();
    auto ngains = EffectiveGains::compute(norm, Precoder::ZF);
    CHECK(norm.sigma_dl_sq == 1.0);
    CHECK(closed_form_sinr(rho, ngains, norm, 0, 1) == Catch::Approx(raw).epsilon(1e-10));
}
