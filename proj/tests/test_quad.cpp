#include <doctest.h>

#include <cmath>
#include <functional>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "krp/quad.hpp"

using namespace krp;

TEST_SUITE_BEGIN("quad");

TEST_CASE("adaptive rule agrees with an independent library on smooth integrands") {
    auto f1 = [](double x) { return std::exp(-x) * std::sin(7.0 * x); };
    auto f2 = [](double x) { return 1.0 / (1.0 + 25.0 * x * x); };
    for (auto [f, a, b] : {std::tuple<std::function<double(double)>, double, double>{f1, 0.0, 3.0},
                           {f2, -1.0, 2.0}}) {
        QuadResult mine = adaptive_gk(f, a, b, 1e-12);
        double theirs = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
            f, a, b, 12, 1e-13);
        CHECK(mine.converged);
        CHECK(mine.value == doctest::Approx(theirs).epsilon(1e-11));
    }
}

TEST_CASE("power-weighted core handles x^gamma exactly where a plain rule struggles") {
    // int_0^1 x^gamma dx = 1/(gamma+1)
    for (double gamma : {-0.9, -0.6, -0.1, 0.3}) {
        auto one = [](double) { return 1.0; };
        QuadResult r = integrate_power_weighted(one, gamma, 1.0, 1e-12);
        CHECK(r.value == doctest::Approx(1.0 / (gamma + 1.0)).epsilon(1e-12));
    }
    // int_0^2 x^{-1/2} cos(x) dx; the independent reference integrates the
    // x = u^2 form, which is smooth, with a different library
    auto f = [](double x) { return std::cos(x); };
    QuadResult r = integrate_power_weighted(f, -0.5, 2.0, 1e-12);
    auto smooth = [](double u) { return 2.0 * std::cos(u * u); };
    double ref = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        smooth, 0.0, std::sqrt(2.0), 15, 1e-14);
    CHECK(ref == doctest::Approx(1.8882490336945141).epsilon(1e-12));
    CHECK(r.value == doctest::Approx(ref).epsilon(1e-10));
}

TEST_CASE("half-line weighted integral reproduces gamma-function values") {
    // int_0^inf x^{a-1} e^{-x} dx = Gamma(a) with a = gamma+1
    for (double gamma : {-0.7, -0.3, 0.5, 1.2}) {
        auto f = [](double x) { return std::exp(-x); };
        QuadResult r = integrate_weighted_halfline(f, gamma, 1.0, 1e-11);
        CHECK(r.converged);
        CHECK(r.value == doctest::Approx(std::tgamma(gamma + 1.0)).epsilon(1e-9));
    }
}

TEST_CASE("tail shells flag slow decay instead of silently truncating") {
    // x^{-1.05} decays too slowly for 60 shells at rtol 1e-10: must not report converged
    auto f = [](double x) { return std::pow(x, -1.05); };
    QuadResult r = integrate_tail_shells(f, 0.0, 1.0, 1e-10, 0.0, 30);
    CHECK_FALSE(r.converged);
    CHECK(r.abs_error > 1e-3);
}

TEST_CASE("slope fit recovers an exact affine law and flags noise via stderr") {
    std::vector<double> x{1, 2, 3, 4, 5, 6}, y;
    for (double xi : x) y.push_back(-0.75 * xi + 2.0);
    SlopeFit fit = slope_fit(x, y);
    CHECK(fit.slope == doctest::Approx(-0.75).epsilon(1e-13));
    CHECK(fit.intercept == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(fit.r2 == doctest::Approx(1.0));
    CHECK(fit.slope_stderr < 1e-12);
}

TEST_CASE("nested singular product integral matches a separable reference") {
    // int over [0,1]^2 of x^{-0.5} y^{-0.25} exp(-x-y) = g1 * g2 (separable check)
    auto f = [](const double* p) { return std::exp(-p[0] - p[1]); };
    std::vector<AxisWeight> axes{{-0.5, 1.0, 1.0}, {-0.25, 1.0, 1.0}};
    QuadResult r = integrate_singular(f, axes, 1e-10);
    auto e = [](double x) { return std::exp(-x); };
    double g1 = integrate_power_weighted(e, -0.5, 1.0, 1e-12).value;
    double g2 = integrate_power_weighted(e, -0.25, 1.0, 1e-12).value;
    CHECK(r.value == doctest::Approx(g1 * g2).epsilon(1e-8));

    // non-separable coupled integrand against a hand-rolled dense grid reference
    auto g = [](const double* p) { return 1.0 / (1.0 + p[0] * p[0] + 3.0 * p[1]); };
    QuadResult rc = integrate_singular(g, axes, 1e-9);
    double ref = 0.0;  // midpoint rule in substituted coordinates, 2000^2 cells
    const int N = 2000;
    for (int i = 0; i < N; ++i) {
        double u = (i + 0.5) / N * 2.0;  // u = x^{1/2}/(1/2) => x = (u/2)^2
        double x = std::pow(0.5 * u, 2.0);
        for (int j = 0; j < N; ++j) {
            double v = (j + 0.5) / N * (4.0 / 3.0);
            double y = std::pow(0.75 * v, 4.0 / 3.0);
            double pt[2] = {x, y};
            ref += g(pt) * (2.0 / N) * (4.0 / 3.0 / N);
        }
    }
    CHECK(rc.value == doctest::Approx(ref).epsilon(2e-5));
}

TEST_SUITE_END();
