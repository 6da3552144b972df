#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "krp/field.hpp"
#include "krp/kernels.hpp"
#include "krp/spectral.hpp"

using namespace krp;

namespace {

const HurstConfig kRough = HurstConfig::space_time(0.6, {0.5});
const Mollifier kGauss = Mollifier::by_name("gauss-gauss");

Lattice small_lattice() {
    Lattice lat;
    lat.d = 1;
    lat.dt = 1.0 / 64;
    lat.dx = 1.0 / 16;
    lat.nt = 96;
    lat.nx = 64;
    return lat;
}

struct Moments {
    double mean = 0.0;
    double var = 0.0;
    double kurt = 0.0;
};

// replica statistics of one node value extracted by the functional
template <class F>
Moments replica_moments(int reps, std::uint64_t master, F&& value) {
    double s1 = 0.0, s2 = 0.0, s4 = 0.0;
    for (int r = 0; r < reps; ++r) {
        double v = value(derive_seed(master, std::uint64_t(r)));
        s1 += v;
        s2 += v * v;
        s4 += v * v * v * v;
    }
    Moments m;
    m.mean = s1 / reps;
    m.var = s2 / reps - m.mean * m.mean;
    m.kurt = (s4 / reps) / (m.var * m.var);
    return m;
}

} // namespace

TEST_SUITE_BEGIN("field");

TEST_CASE("lattice and synthesis argument validation") {
    Lattice lat = small_lattice();

    Lattice bad = lat;
    bad.d = 3;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = lat;
    bad.dt = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = lat;
    bad.nx = 1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    CHECK_THROWS_AS(sample_field(kRough, kGauss, 0, lat, 1), std::invalid_argument);
    CHECK_THROWS_AS(sample_field(HurstConfig::spatial({0.45, 0.45}), kGauss, 2, lat, 1),
                    std::invalid_argument);
    Lattice lat2 = lat;
    lat2.d = 2;
    CHECK_THROWS_AS(sample_field(kRough, kGauss, 2, lat2, 1), std::invalid_argument);
    CHECK_THROWS_AS(sample_field_spatial(kRough, kGauss, 2, lat, 1), std::invalid_argument);

    SynthesisOptions narrow;
    narrow.trunc_xi = 1.0;  // far below the level-2 bandwidth
    CHECK_THROWS_AS(sample_field(kRough, kGauss, 2, lat, 1, narrow), std::invalid_argument);
    narrow.strict = false;
    LatticeField f = sample_field(kRough, kGauss, 2, lat, 1, narrow);
    CHECK(f.trunc_xi == doctest::Approx(1.0));

    CHECK_THROWS_AS(exact_cov(kRough, kGauss, 2, 0.0, {0.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(exact_cov_diff(kRough, kGauss, 2, 3, 0.0, {0.0}), std::invalid_argument);
}

TEST_CASE("seeding is reproducible and sensitive") {
    Lattice lat = small_lattice();
    LatticeField a = sample_field(kRough, kGauss, 2, lat, derive_seed(42, 7));
    LatticeField b = sample_field(kRough, kGauss, 2, lat, derive_seed(42, 7));
    CHECK(a.samples == b.samples);

    LatticeField c = sample_field(kRough, kGauss, 2, lat, derive_seed(42, 8));
    CHECK(a.samples != c.samples);
    CHECK(derive_seed(42, 7) != derive_seed(43, 7));
}

TEST_CASE("mode sum matches the continuum covariance across lags") {
    Lattice lat = small_lattice();
    int n = 2;
    struct Lag {
        double t;
        double x;
    };
    // truncation plus box periodization stays under half a percent here
    for (Lag lg : {Lag{0.0, 0.0}, Lag{4.0 / 64, 0.0}, Lag{0.25, 0.0}, Lag{0.0, 0.25},
                   Lag{0.0, 0.5}, Lag{2.0 / 64, 3.0 / 16}}) {
        double a = lattice_cov(kRough, kGauss, n, lat, lg.t, {lg.x});
        double b = exact_cov(kRough, kGauss, n, lg.t, {lg.x});
        CHECK(a == doctest::Approx(b).epsilon(5e-3));
        double neg = lattice_cov(kRough, kGauss, n, lat, -lg.t, {-lg.x});
        CHECK(a == doctest::Approx(neg).epsilon(1e-12));
    }
}

TEST_CASE("replica statistics are gaussian with the predicted covariance") {
    Lattice lat = small_lattice();
    int n = 2, reps = 400;
    double pred0 = lattice_cov(kRough, kGauss, n, lat, 0.0, {0.0});
    double predt = lattice_cov(kRough, kGauss, n, lat, 4 * lat.dt, {0.0});
    double predx = lattice_cov(kRough, kGauss, n, lat, 0.0, {4 * lat.dx});

    double ct = 0.0, cx = 0.0;
    Moments m = replica_moments(reps, 1234, [&](std::uint64_t sd) {
        LatticeField f = sample_field(kRough, kGauss, n, lat, sd);
        ct += f.at(32, 17) * f.at(36, 17);
        cx += f.at(32, 17) * f.at(32, 21);
        return f.at(32, 17);
    });
    // three-sigma monte carlo windows for 400 replicas
    CHECK(std::abs(m.mean) < 3.0 * std::sqrt(pred0 / reps));
    CHECK(m.var == doctest::Approx(pred0).epsilon(3.0 * std::sqrt(2.0 / reps)));
    CHECK(m.kurt == doctest::Approx(3.0).epsilon(3.0 * std::sqrt(24.0 / reps) / 3.0));
    CHECK(ct / reps == doctest::Approx(predt).epsilon(0.12));
    CHECK(cx / reps == doctest::Approx(predx).epsilon(0.12));
}

TEST_CASE("coupled levels share low frequencies") {
    Lattice lat = small_lattice();
    int n = 3, mlev = 2, reps = 400;
    double ld = lattice_cov_diff(kRough, kGauss, n, mlev, lat, 0.0, {0.0});
    double ed = exact_cov_diff(kRough, kGauss, n, mlev, 0.0, {0.0});
    CHECK(ld == doctest::Approx(ed).epsilon(1e-4));

    Moments m = replica_moments(reps, 55, [&](std::uint64_t sd) {
        LatticeField fn = sample_field(kRough, kGauss, n, lat, sd);
        LatticeField fm = sample_field(kRough, kGauss, mlev, lat, sd);
        return fn.at(48, 11) - fm.at(48, 11);
    });
    CHECK(m.var == doctest::Approx(ld).epsilon(3.0 * std::sqrt(2.0 / reps)));

    // the gap variance shrinks as the coarse level climbs toward the fine one
    double prev = HUGE_VAL;
    for (int mm : {1, 2, 3, 4}) {
        double v = exact_cov_diff(kRough, kGauss, 5, mm, 0.0, {0.0});
        CHECK(v < prev);
        prev = v;
    }
    CHECK(prev < exact_cov(kRough, kGauss, 5, 0.0, {0.0}));
}

TEST_CASE("kernel convolution is causal and has the predicted variance") {
    Lattice lat = small_lattice();
    lat.nt = 160;
    LocalizedKernel ker = build_localized_kernel(1);
    Fk0Table tab = build_fk0_table(ker);
    int n = 2;

    LatticeField f = sample_field(kRough, kGauss, n, lat, derive_seed(9, 1));
    convolve_K(f, ker);
    CHECK(f.conv_from == 64);

    // perturbing the future must not touch past outputs
    LatticeField g = f;
    for (int ix = 0; ix < lat.nx; ++ix) g.samples[g.index(120, ix)] += 1.0;
    convolve_K(g, ker);
    for (int ix = 0; ix < lat.nx; ++ix) {
        CHECK(g.conv_at(100, ix) == f.conv_at(100, ix));
        CHECK(g.conv_at(121, ix) != f.conv_at(121, ix));
    }

    // unit input integrates the grid-resolved kernel: three dyadic scales at
    // this resolution, each carrying a quarter of the previous one's mass
    LatticeField one = f;
    for (double& v : one.samples) v = 1.0;
    convolve_K(one, ker);
    double mass = 0.333498628 * (1.0 + 0.25 + 0.0625);
    CHECK(one.conv_at(100, 20) == doctest::Approx(mass).epsilon(5e-3));

    int reps = 150;
    double ek = exact_cov_Kfield(kRough, kGauss, ker, tab, n, 0.0, {0.0});
    Moments m = replica_moments(reps, 31, [&](std::uint64_t sd) {
        LatticeField h = sample_field(kRough, kGauss, n, lat, sd);
        convolve_K(h, ker);
        return h.conv_at(150, 33);
    });
    CHECK(m.var == doctest::Approx(ek).epsilon(3.0 * std::sqrt(2.0 / reps)));

    Lattice shortt = lat;
    shortt.nt = 32;
    LatticeField s = sample_field(kRough, kGauss, n, shortt, 1);
    CHECK_THROWS_AS(convolve_K(s, ker), std::invalid_argument);
    Lattice coarse = lat;
    coarse.dx = 2.0;
    coarse.nx = 4;
    LatticeField c = sample_field(kRough, kGauss, 1, coarse, 1);
    CHECK_THROWS_AS(convolve_K(c, ker), std::invalid_argument);
}

TEST_CASE("spatial synthesis reproduces the closed-form gaussian covariance") {
    // H = (1/2, 1/2) kills the spectral weight, so the covariance is an exact
    // gaussian and the mode sum should agree to periodization accuracy, which
    // is far below quadrature tolerance at this box size
    HurstConfig flat = HurstConfig::spatial({0.5, 0.5});
    Lattice lat;
    lat.d = 2;
    lat.dx = 1.0 / 16;
    lat.nx = 64;
    NormalizationConstants nc = normalization_constants(flat);
    int n = 2;
    for (double lg : {0.0, 0.125, 0.25}) {
        double a = lattice_cov(flat, kGauss, n, lat, 0.0, {lg, 0.0});
        double b = exact_cov_spatial(flat, kGauss, n, {lg, 0.0});
        double closed = nc.c_total * nc.c_total * std::acos(-1.0) * std::pow(4.0, n) *
                        std::exp(-lg * lg * std::pow(4.0, n) / 4.0);
        CHECK(a == doctest::Approx(closed).epsilon(1e-10));
        CHECK(b == doctest::Approx(closed).epsilon(1e-7));
    }

    int reps = 400;
    double pred0 = lattice_cov(flat, kGauss, n, lat, 0.0, {0.0, 0.0});
    double predl = lattice_cov(flat, kGauss, n, lat, 0.0, {4 * lat.dx, 3 * lat.dx});
    double cl = 0.0;
    Moments m = replica_moments(reps, 777, [&](std::uint64_t sd) {
        LatticeField f = sample_field_spatial(flat, kGauss, n, lat, sd);
        cl += f.at(0, 20, 41) * f.at(0, 24, 44);
        return f.at(0, 20, 41);
    });
    CHECK(std::abs(m.mean) < 3.0 * std::sqrt(pred0 / reps));
    CHECK(m.var == doctest::Approx(pred0).epsilon(3.0 * std::sqrt(2.0 / reps)));
    CHECK(cl / reps == doctest::Approx(predl).epsilon(0.12));

    LatticeField a = sample_field_spatial(flat, kGauss, n, lat, derive_seed(5, 5));
    LatticeField b = sample_field_spatial(flat, kGauss, n, lat, derive_seed(5, 5));
    CHECK(a.samples == b.samples);
}

TEST_CASE("time-integrated kernel convolution matches its spectral variance") {
    HurstConfig hs = HurstConfig::spatial({0.45, 0.45});
    Lattice lat;
    lat.d = 2;
    lat.dx = 1.0 / 16;
    lat.nx = 64;
    LocalizedKernel ker = build_localized_kernel(2);
    TildeKTransform tk = build_tilde_k_transform(ker);
    int n = 2, reps = 200;

    double rough = lattice_cov(hs, kGauss, n, lat, 0.0, {0.125, 0.0625});
    double exact = exact_cov_spatial(hs, kGauss, n, {0.125, 0.0625});
    CHECK(rough == doctest::Approx(exact).epsilon(5e-3));

    double ek = exact_cov_tildeK_field(hs, kGauss, ker, tk, n, {0.0, 0.0});
    Moments m = replica_moments(reps, 88, [&](std::uint64_t sd) {
        LatticeField f = sample_field_spatial(hs, kGauss, n, lat, sd);
        convolve_tildeK(f, ker, tk);
        return f.conv_at(0, 30, 12);
    });
    CHECK(m.var == doctest::Approx(ek).epsilon(3.0 * std::sqrt(2.0 / reps)));
}

TEST_SUITE_END();
