#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "krp/kernels.hpp"
#include "krp/quad.hpp"
#include "krp/renorm.hpp"
#include "krp/spectral.hpp"

using namespace krp;

namespace {

double c_squared(const HurstConfig& hc) {
    NormalizationConstants nc = normalization_constants(hc);
    return nc.c_total * nc.c_total;
}

// cartesian route for the gaussian-mollified constants at level n, without
// the polar change of variables the library uses. The lorentzian angle
// factor is integrated at its own scale so no node pattern has to chase a
// narrow spike, and the radial powers fold into the axis weights.
double rate_cartesian(double h0, double H, int n, double rtol) {
    double s2 = std::ldexp(1.0, -n), s4 = std::ldexp(1.0, -2 * n);
    auto wfac = [&](double a) {
        auto fw = [&](double w) {
            double z = s4 * a * w;
            return std::exp(-z * z) / (1.0 + w * w);
        };
        return integrate_weighted_halfline(fw, 1.0 - 2.0 * h0, 1.0, rtol * 0.3).value;
    };
    auto fo = [&](double xi) {
        double z = s2 * xi;
        return std::exp(-z * z) * wfac(0.5 * xi * xi);
    };
    return 4.0 * std::pow(2.0, 2.0 * h0 - 1.0) *
           integrate_weighted_halfline(fo, 3.0 - 2.0 * H - 4.0 * h0, 1.0, rtol).value;
}

} // namespace

TEST_SUITE_BEGIN("renorm");

TEST_CASE("rate integral against frozen values and a cartesian route") {
    auto g = Mollifier::gauss_gauss();
    auto ih = Mollifier::indicator_heat();
    auto hc1 = HurstConfig::space_time(0.75, {0.45});
    CHECK(rate_integral(hc1, g) == doctest::Approx(121.485136483619).epsilon(1e-9));
    CHECK(rate_integral(hc1, ih) == doctest::Approx(122.121314711748).epsilon(1e-9));
    CHECK(rate_integral(HurstConfig::space_time(0.70, {0.45}), g) ==
          doctest::Approx(31.017419813942).epsilon(1e-9));
    CHECK(rate_integral(HurstConfig::space_time(0.75, {0.6, 0.55}), g) ==
          doctest::Approx(59.636560542821).epsilon(1e-9));
    CHECK(rate_cartesian(0.75, 0.45, 0, 1e-8) ==
          doctest::Approx(rate_integral(hc1, g)).epsilon(1e-8));
    CHECK_THROWS_AS(rate_integral(HurstConfig::space_time(0.9, {0.8}), g),
                    std::invalid_argument);
    CHECK_THROWS_AS(rate_integral(HurstConfig::space_time(0.8, {0.4}), g),
                    std::invalid_argument);
    CHECK_THROWS_AS(rate_integral(HurstConfig::spatial({0.6, 0.6, 0.6}), g),
                    std::invalid_argument);
}

TEST_CASE("spatial rate integral against the gamma-function route") {
    auto g = Mollifier::gauss_gauss();
    auto hs3 = HurstConfig::spatial({0.6, 0.6, 0.6});
    CHECK(rate_integral_spatial(hs3, g) ==
          doctest::Approx(109.1385903941137).epsilon(1e-9));
    // closed form 2 prod Gamma(1 - H_i) / (d - H - 1) at a second configuration
    auto hs2 = HurstConfig::spatial({0.3, 0.45});
    double closed = 2.0 * std::exp(std::lgamma(0.7) + std::lgamma(0.55)) / 0.25;
    CHECK(rate_integral_spatial(hs2, g) == doctest::Approx(closed).epsilon(1e-9));
    // the spatial weight has no time factor, so both mollifier kinds agree
    CHECK(rate_integral_spatial(hs3, Mollifier::indicator_heat()) ==
          rate_integral_spatial(hs3, g));
    CHECK_THROWS_AS(rate_integral_spatial(HurstConfig::spatial({0.5, 0.5}), g),
                    std::invalid_argument);
    CHECK_THROWS_AS(rate_integral_spatial(HurstConfig::space_time(0.75, {0.45}), g),
                    std::invalid_argument);
}

TEST_CASE("sub-critical constants scale dyadically across levels") {
    auto g = Mollifier::gauss_gauss();
    auto hc1 = HurstConfig::space_time(0.75, {0.45});
    double c2 = c_squared(hc1);
    double J = rate_integral(hc1, g);
    double alpha = hc1.d + 1.0 - 2.0 * 0.75 - hc1.hsum();  // 0.05
    for (int n : {0, 2, 4}) {
        double direct = renorm_constant(hc1, g, n);
        CHECK(direct ==
              doctest::Approx(c2 * std::pow(2.0, 2.0 * n * alpha) * J).epsilon(1e-12));
    }
    // level-2 constant through the cartesian route as well
    CHECK(c2 * rate_cartesian(0.75, 0.45, 2, 1e-8) ==
          doctest::Approx(renorm_constant(hc1, g, 2)).epsilon(1e-8));
    // spatial analogue, identical dyadic factor per level
    auto hs3 = HurstConfig::spatial({0.6, 0.6, 0.6});
    double Js = rate_integral_spatial(hs3, g);
    double cs2 = c_squared(hs3);
    for (int n : {0, 3}) {
        CHECK(renorm_constant_spatial(hs3, g, n) ==
              doctest::Approx(cs2 * std::pow(4.0, n * 0.2) * Js).epsilon(1e-10));
    }
    CHECK_THROWS_AS(renorm_constant(HurstConfig::space_time(0.9, {0.8}), g, 2),
                    std::invalid_argument);
    CHECK_THROWS_AS(renorm_constant(hc1, g, -1), std::invalid_argument);
    CHECK_THROWS_AS(renorm_constant_spatial(HurstConfig::spatial({0.7, 0.7}), g, 2),
                    std::invalid_argument);
}

TEST_CASE("border constants climb at the closed-form slope") {
    auto g = Mollifier::gauss_gauss();
    auto ih = Mollifier::indicator_heat();
    auto hb = HurstConfig::space_time(0.8, {0.4});
    double slope = border_slope_closed_form(hb);
    CHECK(slope / c_squared(hb) == doctest::Approx(11.230643501866730).epsilon(1e-9));
    double g7 = renorm_constant(hb, g, 7), g8 = renorm_constant(hb, g, 8);
    CHECK(g8 - g7 == doctest::Approx(slope).epsilon(2e-4));
    double i7 = renorm_constant(hb, ih, 7), i8 = renorm_constant(hb, ih, 8);
    CHECK(i8 - i7 == doctest::Approx(slope).epsilon(2e-4));
    // the deep increments are mollifier independent
    CHECK(i8 - i7 == doctest::Approx(g8 - g7).epsilon(1e-6));

    auto hsb = HurstConfig::spatial({0.5, 0.5});
    double sslope = border_slope_closed_form(hsb);
    CHECK(sslope == doctest::Approx(0.220635600152652).epsilon(1e-8));  // ln 2 / pi
    double s6 = renorm_constant_spatial(hsb, g, 6), s7 = renorm_constant_spatial(hsb, g, 7);
    CHECK(s7 - s6 == doctest::Approx(sslope).epsilon(1e-3));
    CHECK_THROWS_AS(border_slope_closed_form(HurstConfig::space_time(0.75, {0.45})),
                    std::invalid_argument);
}

TEST_CASE("localized kernel constants track every regime") {
    auto g = Mollifier::gauss_gauss();
    auto ker = build_localized_kernel(1);
    auto tab = build_fk0_table(ker);

    // sub-critical: the difference to the heat-kernel constants stabilizes,
    // the remainder part of the kernel contributes a convergent correction
    auto hc1 = HurstConfig::space_time(0.75, {0.45});
    double d0 = renorm_constant(hc1, g, 0) - renorm_constant_kernel(hc1, g, ker, tab, 0, 1e-6);
    double d2 = renorm_constant(hc1, g, 2) - renorm_constant_kernel(hc1, g, ker, tab, 2, 1e-6);
    double d4 = renorm_constant(hc1, g, 4) - renorm_constant_kernel(hc1, g, ker, tab, 4, 1e-6);
    CHECK(d0 > 0.0);
    CHECK(std::fabs(d4 - d2) < 0.2 * std::fabs(d2 - d0));

    // border: the same log slope enters through the mollifier window
    auto hb = HurstConfig::space_time(0.8, {0.4});
    double b5 = renorm_constant_kernel(hb, g, ker, tab, 5, 1e-6);
    double b6 = renorm_constant_kernel(hb, g, ker, tab, 6, 1e-6);
    CHECK(b6 - b5 == doctest::Approx(border_slope_closed_form(hb)).epsilon(1e-2));

    // young: the sequence rises to the limit mean, which has to agree with
    // the physical-space route through the fractional covariance density
    auto hy = HurstConfig::space_time(0.9, {0.8});
    double M = young_limit_mean(hy, ker, tab, 1e-5);
    double h0 = 0.9, h1 = 0.8;
    auto fouter = [&](double s) {
        auto fy = [&](double y) {
            double x = std::sqrt(s) * y;
            return ker.eval_K(s, &x);
        };
        return std::sqrt(s) *
               integrate_weighted_halfline(fy, 2.0 * h1 - 2.0, 1.0, 3e-8).value;
    };
    double phys = h0 * (2.0 * h0 - 1.0) * h1 * (2.0 * h1 - 1.0) * 2.0 *
                  integrate_power_weighted(fouter, 2.0 * h0 + h1 - 3.0, 1.0, 1e-7).value;
    CHECK(phys == doctest::Approx(M).epsilon(1e-4));
    double y2 = renorm_constant_kernel(hy, g, ker, tab, 2, 1e-6);
    double y4 = renorm_constant_kernel(hy, g, ker, tab, 4, 1e-6);
    double y6 = renorm_constant_kernel(hy, g, ker, tab, 6, 1e-6);
    CHECK(y2 < y4);
    CHECK(y4 < y6);
    CHECK(y6 < M);
    CHECK(M - y6 < 0.3 * (M - y4));
    CHECK(y6 == doctest::Approx(M).epsilon(2e-2));

    CHECK_THROWS_AS(young_limit_mean(hc1, ker, tab), std::invalid_argument);
    CHECK_THROWS_AS(
        renorm_constant_kernel(HurstConfig::space_time(0.75, {0.6, 0.55}), g, ker, tab, 1),
        std::invalid_argument);
}

TEST_CASE("spatial kernel constants reproduce the border slope with both profiles") {
    auto g = Mollifier::gauss_gauss();
    auto hsb = HurstConfig::spatial({0.5, 0.5});
    double slope = border_slope_closed_form(hsb);

    auto ker = build_localized_kernel(2);
    auto tk = build_tilde_k_transform(ker);
    double s5 = renorm_constant_spatial_kernel(hsb, g, tk, 5, 1e-6);
    double s6 = renorm_constant_spatial_kernel(hsb, g, tk, 6, 1e-6);
    CHECK(s6 - s5 == doctest::Approx(slope).epsilon(2e-2));

    auto kerp = build_localized_kernel(2, 24, ProfileKind::poly_c3);
    auto tkp = build_tilde_k_transform(kerp);
    double p5 = renorm_constant_spatial_kernel(hsb, g, tkp, 5, 1e-6);
    double p6 = renorm_constant_spatial_kernel(hsb, g, tkp, 6, 1e-6);
    CHECK(p6 - p5 == doctest::Approx(slope).epsilon(2e-2));
    // the slope does not depend on the localization profile
    CHECK(p6 - p5 == doctest::Approx(s6 - s5).epsilon(1e-5));

    // sub-critical spatial model: difference to the abstract constants settles
    auto hss = HurstConfig::spatial({0.45, 0.45});
    double d[4];
    for (int n = 2; n <= 5; ++n)
        d[n - 2] = renorm_constant_spatial(hss, g, n) -
                   renorm_constant_spatial_kernel(hss, g, tk, n, 1e-6);
    CHECK(std::fabs(d[3] - d[2]) < std::fabs(d[2] - d[1]));
    CHECK(std::fabs(d[2] - d[1]) < std::fabs(d[1] - d[0]));

    CHECK_THROWS_AS(
        renorm_constant_spatial_kernel(HurstConfig::spatial({0.6, 0.6, 0.6}), g, tk, 1),
        std::invalid_argument);
    CHECK_THROWS_AS(renorm_constant_spatial_kernel(hsb, g, tk, -1), std::invalid_argument);
}

TEST_SUITE_END();
