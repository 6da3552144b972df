#include <doctest.h>

#include <cmath>

#include "krp/spectral.hpp"

using namespace krp;

TEST_SUITE_BEGIN("spectral");

TEST_CASE("regime classification covers the documented windows") {
    CHECK(HurstConfig::space_time(0.9, {0.9}).regime() == Regime::young);
    CHECK(HurstConfig::space_time(0.75, {0.45}).regime() == Regime::rough_subcritical);
    CHECK(HurstConfig::space_time(0.8, {0.4}).regime() == Regime::rough_border);
    CHECK(HurstConfig::space_time(0.5, {0.4}).regime() == Regime::unsupported);
    // spatial model: window (d-3/2, d-1], border at H = d-1
    CHECK(HurstConfig::spatial({0.5, 0.5}).regime() == Regime::rough_border);
    CHECK(HurstConfig::spatial({0.6, 0.6, 0.6}).regime() == Regime::rough_subcritical);
    CHECK(HurstConfig::spatial({0.9, 0.8}).regime() == Regime::young);
    CHECK_THROWS(HurstConfig::spatial({0.5}));          // spatial needs d >= 2
    CHECK_THROWS(HurstConfig::space_time(1.1, {0.5}));  // index outside (0,1)
}

TEST_CASE("spectral weight matches hand values") {
    auto hc = HurstConfig::space_time(0.75, {0.5});
    double xi = 1.0;
    CHECK(spectral_weight(hc, 4.0, &xi) == doctest::Approx(0.5).epsilon(1e-14));
    double xi2 = 3.0;
    auto hc2 = HurstConfig::space_time(0.5, {0.75});
    CHECK(spectral_weight(hc2, 7.0, &xi2) ==
          doctest::Approx(std::pow(3.0, -0.5)).epsilon(1e-14));
    // weight blows up on the axes when an index exceeds 1/2
    CHECK(std::isinf(spectral_weight(hc, 0.0, &xi)));
}

TEST_CASE("normalization integral agrees with the closed form 2pi/(Gamma(1+2H) sin(pi H))") {
    for (double H : {0.25, 0.4, 0.45, 0.5, 0.55, 0.6, 0.75, 0.8}) {
        double closed = 2.0 * M_PI / (std::tgamma(1.0 + 2.0 * H) * std::sin(M_PI * H));
        double a = norm_integral_1d(H, 1e-11);
        double b = norm_integral_1d_alt(H, 1e-10);
        CHECK(a == doctest::Approx(closed).epsilon(2e-9));
        CHECK(b == doctest::Approx(closed).epsilon(2e-7));
    }
}

TEST_CASE("H=1/2 normalization makes the noise white") {
    // I(1/2) = 2pi exactly, so c = (2pi)^{-1/2} per index
    auto nc = normalization_constants(HurstConfig::space_time(0.5, {0.5}));
    CHECK(nc.c_time == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-8));
    CHECK(nc.c_space[0] == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-8));
    CHECK(nc.c_total == doctest::Approx(1.0 / (2.0 * M_PI)).epsilon(1e-8));
    CHECK(nc.max_rel_disagreement < 1e-6);
}

TEST_CASE("mollifier transforms are real, even, bounded by 1, and unit mass") {
    for (auto m : {Mollifier::gauss_gauss(), Mollifier::indicator_heat()}) {
        double xi = 0.7;
        CHECK(m.fourier(0.0, &xi, 0).imag() == 0.0);
        CHECK(m.fourier(0.3, &xi, 1).real() ==
              doctest::Approx(m.fourier(-0.3, &xi, 1).real()).epsilon(1e-15));
        for (double lam : {0.0, 0.5, 2.0, 13.7, 200.0}) {
            CHECK(m.time_factor_abs(lam) <= 1.0 + 1e-15);
            CHECK(m.time_factor_abs(lam) == doctest::Approx(m.time_factor_abs(-lam)));
        }
        double z = 0.0;
        CHECK(m.fourier(0.0, &z, 1).real() == doctest::Approx(1.0).epsilon(1e-14));
    }
    // indicator time factor is the interval indicator transform modulus
    auto ih = Mollifier::indicator_heat();
    CHECK(ih.time_factor_abs(2.0) == doctest::Approx(std::abs(std::sin(1.0))).epsilon(1e-12));
    CHECK(ih.time_factor_abs(2.0 * M_PI) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("decay certificate passes the catalog mollifiers across tau in [0,1]^{d+1}") {
    std::vector<std::vector<double>> taus = {
        {0.0, 0.0}, {0.5, 0.5}, {1.0, 1.0}, {1.0, 0.0}, {0.25, 0.75}};
    for (auto m : {Mollifier::gauss_gauss(), Mollifier::indicator_heat()}) {
        auto cert = verify_assumption_rho(m, 1, taus);
        CHECK(cert.pass);
        CHECK(cert.unit_mass_residual < 1e-13);
        CHECK(cert.lipschitz_estimate < 10.0);
        for (const auto& row : cert.rows) CHECK(row.pass);
    }
}

TEST_SUITE_END();
