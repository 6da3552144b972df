#include <doctest.h>

#include <cmath>
#include <complex>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "krp/quad.hpp"
#include "krp/testfn.hpp"

using namespace krp;
using cplx = std::complex<double>;

namespace {

cplx quad_transform(const BumpFactor& f, double om) {
    auto re = [&](double u) { return f.eval(u, 0) * std::cos(om * u); };
    auto im = [&](double u) { return -f.eval(u, 0) * std::sin(om * u); };
    return {adaptive_gk(re, f.lo(), f.hi(), 1e-12).value,
            adaptive_gk(im, f.lo(), f.hi(), 1e-12).value};
}

// plain Simpson for int_0^y g, y of either sign
cplx simpson0(const std::function<cplx(double)>& g, double y, int n) {
    cplx acc = g(0.0) + g(y);
    double h = y / n;
    for (int j = 1; j < n; ++j) acc += g(j * h) * ((j % 2) ? 4.0 : 2.0);
    return acc * (h / 3.0);
}

cplx brute_osc1(double y, double lam) {
    return simpson0([&](double z) { return std::exp(cplx(0.0, -lam * z)); }, y, 400);
}

cplx brute_osc2(double y, double lam, double lamt) {
    auto outer = [&](double z) {
        return std::exp(cplx(0.0, -lamt * z)) *
               simpson0([&](double w) { return std::exp(cplx(0.0, -lam * w)); }, z, 400);
    };
    return simpson0(outer, y, 400);
}

double nested_mass(const ScaledTestFunction& f, double t0, double t1, double x0, double x1) {
    auto outer = [&](double t) {
        auto in = [&](double y) { return f.eval(t, &y); };
        return adaptive_gk(in, x0, x1, 1e-11).value;
    };
    return adaptive_gk(outer, t0, t1, 1e-10).value;
}

} // namespace

TEST_SUITE_BEGIN("testfn");

TEST_CASE("factor derivatives match finite differences, zero off support") {
    auto plain = TestFunction::tensor_bump(1, 5);
    auto var = TestFunction::variant(1, 5);
    const double h = 1e-6;
    for (const BumpFactor* f : {&plain.factors[0], &var.factors[0], &var.factors[1]}) {
        double mid = 0.5 * (f->lo() + f->hi()), half = 0.5 * (f->hi() - f->lo());
        for (double r : {-0.83, -0.31, 0.2, 0.64}) {
            double u = mid + r * half;
            double fd1 = (f->eval(u + h, 0) - f->eval(u - h, 0)) / (2 * h);
            double fd2 = (f->eval(u + h, 1) - f->eval(u - h, 1)) / (2 * h);
            CHECK(f->eval(u, 1) == doctest::Approx(fd1).epsilon(2e-6));
            CHECK(f->eval(u, 2) == doctest::Approx(fd2).epsilon(2e-5));
        }
        CHECK(f->eval(f->hi() + 0.01, 0) == 0.0);
        CHECK(f->eval(f->lo() - 0.01, 3) == 0.0);
    }
}

TEST_CASE("bump transform: seam continuity and quadrature agreement") {
    // references on both sides of the series/Bessel switch at |omega| = 2
    CHECK(bump_fourier_base(5, 1.999) == doctest::Approx(0.632540096578240922).epsilon(1e-13));
    CHECK(bump_fourier_base(5, 2.001) == doctest::Approx(0.632341356917192737).epsilon(1e-13));
    CHECK(bump_fourier_base(7, 1.999) == doctest::Approx(0.565520648335633183).epsilon(1e-13));
    CHECK(bump_fourier_base(7, 2.001) == doctest::Approx(0.565385914939816923).epsilon(1e-13));
    for (int k : {5, 7}) {
        for (double om : {0.0, 0.3, 1.7, 2.4, 6.0, 19.7}) {
            auto g = [&](double v) { return std::pow(1.0 - v * v, k) * std::cos(om * v); };
            double ref = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                g, -1.0, 1.0, 12, 1e-14);
            CHECK(bump_fourier_base(k, om) == doctest::Approx(ref).epsilon(1e-11));
        }
    }
}

TEST_CASE("factor transforms cover translation and modulation") {
    auto var = TestFunction::variant(1, 5);
    for (const BumpFactor* f : {&var.factors[0], &var.factors[1]}) {
        for (double om : {0.0, 1.3, 4.7, -2.6}) {
            cplx ref = quad_transform(*f, om);
            CHECK(std::abs(f->fourier(om) - ref) < 1e-10);
        }
    }
    // full tensor transform against joint 2-D quadrature
    auto psi = TestFunction::tensor_bump(1, 5);
    double lam = 1.3, xi = -2.1;
    auto outer_re = [&](double t) {
        auto in = [&](double y) {
            double ph = lam * t + xi * y;
            return psi.eval(t, &y) * std::cos(ph);
        };
        return adaptive_gk(in, -1.0, 1.0, 1e-12).value;
    };
    auto outer_im = [&](double t) {
        auto in = [&](double y) {
            double ph = lam * t + xi * y;
            return -psi.eval(t, &y) * std::sin(ph);
        };
        return adaptive_gk(in, -1.0, 1.0, 1e-12).value;
    };
    cplx ref(adaptive_gk(outer_re, -1.0, 1.0, 1e-11).value,
             adaptive_gk(outer_im, -1.0, 1.0, 1e-11).value);
    CHECK(std::abs(psi.fourier(lam, &xi) - ref) < 1e-9);
}

TEST_CASE("family keeps the derivative norm at or below one") {
    for (const auto& psi : TestFunction::family(1)) {
        double cn = psi.c_norm();
        CHECK(cn <= 1.0);
        CHECK(cn > 0.99);
    }
    double cn2 = TestFunction::family(2)[0].c_norm();
    CHECK(cn2 <= 1.0);
    CHECK(cn2 > 0.99);
    // support sits inside the parabolic unit ball
    auto psi = TestFunction::tensor_bump(1, 5);
    double y = 0.0;
    CHECK(psi.eval(1.05, &y) == 0.0);
    y = 1.02;
    CHECK(psi.eval(0.9, &y) == 0.0);
}

TEST_CASE("scaling operator: mass invariance, support shrinkage, transform") {
    auto psi = TestFunction::tensor_bump(1, 5);
    double zero = 0.0;
    double mass = psi.fourier(0.0, &zero).real();
    for (double delta : {1.0, 0.5, 0.25}) {
        auto sc = scale_translate(psi, delta, 0.3, {-0.2});
        double m = nested_mass(sc, 0.3 - delta * delta, 0.3 + delta * delta, -0.2 - delta,
                               -0.2 + delta);
        CHECK(m == doctest::Approx(mass).epsilon(1e-8));
        double ypt = -0.2;
        CHECK(sc.eval(0.3 + 1.01 * delta * delta, &ypt) == 0.0);
        ypt = -0.2 + 1.01 * delta;
        CHECK(sc.eval(0.3, &ypt) == 0.0);
        CHECK(sc.fourier(0.0, &zero).real() == doctest::Approx(mass).epsilon(1e-12));
    }
    auto ident = scale_translate(psi, 1.0, 0.0, {0.0});
    double yy = 0.41;
    CHECK(ident.eval(0.37, &yy) == doctest::Approx(psi.eval(0.37, &yy)).epsilon(1e-14));
    CHECK_THROWS(scale_translate(psi, 1.5, 0.0, {0.0}));
    CHECK_THROWS(scale_translate(psi, 0.5, 0.0, {0.0, 0.0}));
}

TEST_CASE("dyadic lattice: counts, nesting, validation") {
    std::vector<std::pair<double, double>> box = {{-1.0, 1.0}};
    auto l0 = dyadic_lattice(0, 1.0, box);
    CHECK(l0.size() == 9);
    for (int n : {1, 2}) {
        auto ln = dyadic_lattice(n, 1.0, box);
        std::size_t expect = (2 * (1 << (2 * n)) + 1) * (2 * (1 << n) + 1);
        CHECK(ln.size() == expect);
    }
    auto l1 = dyadic_lattice(1, 1.0, box);
    auto l2 = dyadic_lattice(2, 1.0, box);
    for (const auto& p : l1) {
        bool found = false;
        for (const auto& q : l2)
            if (std::abs(p.t - q.t) < 1e-12 && std::abs(p.x[0] - q.x[0]) < 1e-12) found = true;
        CHECK(found);
    }
    CHECK_THROWS(dyadic_lattice(1, 1.0, {{0.5, -0.5}}));
    CHECK_THROWS(dyadic_lattice(-1, 1.0, box));
}

TEST_CASE("oscillatory primitives match brute-force quadrature") {
    for (auto [y, lam] : std::vector<std::pair<double, double>>{
             {0.8, 2.6}, {1.0, 0.0}, {-0.9, 3.0}, {0.7, 1e-9}, {0.5, -6.2}}) {
        CHECK(std::abs(osc1(y, lam) - brute_osc1(y, lam)) < 1e-8);
    }
    struct Pt {
        double y, lam, lamt;
    };
    for (auto [y, lam, lamt] : {Pt{0.8, 2.6, -2.6}, Pt{1.0, 0.0, 5.0}, Pt{-0.9, 3.0, 0.0},
                                Pt{0.7, 1e-7, 4.0}, Pt{0.6, 4.0, -4.0 + 1e-8},
                                Pt{1.0, 7.3, 2.2}, Pt{0.0, 1.0, 1.0}}) {
        CHECK(std::abs(osc2(y, lam, lamt) - brute_osc2(y, lam, lamt)) < 1e-7);
    }
}

TEST_CASE("T at zero frequency reduces to a plain moment") {
    auto psi = TestFunction::tensor_bump(1, 5);
    const auto& f0 = psi.factors[0];
    const auto& f1 = psi.factors[1];
    auto m0 = [&](double u) { return std::abs(f0.eval(u, 1)); };
    auto m1 = [&](double u) { return std::abs(f1.eval(u, 1)) * u * u; };
    double expect = std::sqrt(adaptive_gk(m0, -1.0, 1.0, 1e-11).value *
                              adaptive_gk(m1, -1.0, 1.0, 1e-11).value);
    CHECK(T_functional(psi, 1, 0.0) == doctest::Approx(expect).epsilon(1e-8));
}

TEST_CASE("T and Q are even under joint sign flips and nonnegative") {
    auto psi = TestFunction::variant(1, 5);
    for (double lam : {0.7, 3.3}) {
        CHECK(T_functional(psi, 0, lam) >= 0.0);
        CHECK(T_functional(psi, 1, lam) ==
              doctest::Approx(T_functional(psi, 1, -lam)).epsilon(1e-10));
    }
    CHECK(Q_functional(psi, 1, 1.3, 2.9) ==
          doctest::Approx(Q_functional(psi, 1, -1.3, -2.9)).epsilon(1e-10));
}

TEST_CASE("T decays like the inverse frequency") {
    auto psi = TestFunction::tensor_bump(1, 5);
    std::vector<double> lx, ly;
    for (int j = 0; j < 25; ++j) {
        double lam = std::pow(10.0, 3.0 * j / 24.0);
        double t = T_functional(psi, 1, lam);
        lx.push_back(std::log(lam));
        ly.push_back(std::log(t * t));
    }
    SlopeFit fit = slope_fit(lx, ly);
    CHECK(fit.slope > -2.3);
    CHECK(fit.slope < -1.7);
}

TEST_CASE("Q against dense brute force") {
    auto psi = TestFunction::tensor_bump(1, 5);
    const auto& f1 = psi.factors[1];
    double pret = adaptive_gk([&](double u) { return std::abs(psi.factors[0].eval(u, 1)); },
                              -1.0, 1.0, 1e-11)
                      .value;
    for (auto [lam, lamt] : std::vector<std::pair<double, double>>{{0.9, 2.1}, {3.0, 0.0}}) {
        // Simpson outer + Simpson-squared inner, no shared closed forms
        int n = 200;
        double acc = 0.0, hstep = 2.0 / n;
        for (int j = 0; j <= n; ++j) {
            double u = -1.0 + j * hstep;
            double wgt = (j == 0 || j == n) ? 1.0 : ((j % 2) ? 4.0 : 2.0);
            double inner = std::abs(f1.eval(u, 1)) * std::norm(brute_osc2(u, lam, lamt));
            acc += wgt * inner;
        }
        double ref = std::sqrt(pret * acc * hstep / 3.0);
        CHECK(Q_functional(psi, 1, lam, lamt) == doctest::Approx(ref).epsilon(1e-4));
    }
}

TEST_CASE("integrability probes: decaying cases pass, the borderline case fails") {
    auto psi = TestFunction::tensor_bump(1, 5);
    auto r1 = check_TQ_integrability(psi, 1, 0.8, 0.8, 1, 5);
    CHECK(r1.stable);
    auto r2 = check_TQ_integrability(psi, 2, 1.0, 1.0, 1, 6);
    CHECK(r2.stable);
    auto r3 = check_TQ_integrability(psi, 3, 2.0, 1.5, 1, 6);
    CHECK(r3.stable);
    auto neg = check_TQ_integrability(psi, 3, 1.45, 1.45, 1, 6);
    CHECK_FALSE(neg.stable);
    CHECK(neg.decay_ratio > 0.95);
}

TEST_CASE("weighted transform integral is cutoff stable and matches a dense grid") {
    auto psi = TestFunction::tensor_bump(1, 5);
    auto rep = check_psi_weight_integral(psi, HurstConfig::space_time(0.8, {0.9}));
    CHECK(rep.stable);
    auto flat = check_psi_weight_integral(psi, HurstConfig::space_time(0.5, {0.5}));
    CHECK(flat.stable);
    // dense midpoint reference on the joint (non-factorized) transform modulus
    int n = 700;
    double B = 60.0, hcell = B / n, acc = 0.0;
    for (int a = 0; a < n; ++a) {
        double lam = (a + 0.5) * hcell;
        for (int b = 0; b < n; ++b) {
            double xi = (b + 0.5) * hcell;
            acc += std::abs(psi.fourier(lam, &xi));
        }
    }
    acc *= 4.0 * hcell * hcell;  // even in both arguments
    CHECK(flat.value == doctest::Approx(acc).epsilon(2e-3));
}

TEST_SUITE_END();
