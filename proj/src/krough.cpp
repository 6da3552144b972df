#include "krp/krough.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <utility>

#include "krp/quad.hpp"
#include "krp/renorm.hpp"

namespace krp {

namespace {

constexpr double kTol = 1e-9;

struct SupportGrid {
    int it0 = 0, it1 = 0;
    int ix0[2] = {0, 0}, ix1[2] = {0, 0};
};

// Node range of the scaled support inside the lattice; throws when the
// support leaves the domain or a support axis holds fewer than four nodes.
SupportGrid support_grid(const Lattice& lat, int ell, double s,
                         const std::vector<double>& x, bool with_time) {
    if (ell < 0) throw std::invalid_argument("pairing: scale index must be >= 0");
    if (int(x.size()) != lat.d) throw std::invalid_argument("pairing: center dimension mismatch");
    const double delta = std::ldexp(1.0, -ell);
    SupportGrid g;
    if (with_time) {
        const double lo = s - delta * delta, hi = s + delta * delta;
        if (lo < lat.t0 - kTol || hi > lat.t_end() + kTol)
            throw std::invalid_argument("pairing: scaled support leaves the time window");
        g.it0 = int(std::ceil((lo - lat.t0) / lat.dt - kTol));
        g.it1 = int(std::floor((hi - lat.t0) / lat.dt + kTol));
        if (g.it1 - g.it0 + 1 < 4)
            throw std::invalid_argument("pairing: time axis under-resolved at this scale");
    }
    const double xmax = (lat.nx - 1) * lat.dx;
    for (int i = 0; i < lat.d; ++i) {
        const double lo = x[i] - delta, hi = x[i] + delta;
        if (lo < -kTol || hi > xmax + kTol)
            throw std::invalid_argument("pairing: scaled support leaves the spatial box");
        g.ix0[i] = int(std::ceil(lo / lat.dx - kTol));
        g.ix1[i] = int(std::floor(hi / lat.dx + kTol));
        if (g.ix1[i] - g.ix0[i] + 1 < 4)
            throw std::invalid_argument("pairing: space axis under-resolved at this scale");
    }
    return g;
}

int node_index(double v, double origin, double step, const char* what) {
    double u = (v - origin) / step;
    int k = int(std::lround(u));
    if (std::abs(u - k) > 1e-6)
        throw std::invalid_argument(std::string("pairing: ") + what + " not on a lattice node");
    return k;
}

// spatial product of the factors of psi, scaled by 2^{ell d} at center x
double eval_spatial_psi(const TestFunction& psi, int ell, const std::vector<double>& x,
                        const double* y) {
    double v = std::ldexp(1.0, ell * psi.d);
    for (int i = 0; i < psi.d; ++i) v *= psi.factors[i + 1].eval(std::ldexp(y[i] - x[i], ell), 0);
    return v;
}

double c_total2(const HurstConfig& hc) {
    double c = normalization_constants(hc).c_total;
    return c * c;
}

// capped dyadic transform series of the localized kernel (d = 1); terms whose
// scaled argument still lies beyond the table are zero and are skipped
std::complex<double> fourier_K_capped(const LocalizedKernel& ker, const Fk0Table& tab,
                                      double lam, double xi, int l_cap) {
    int top = l_cap < 0 ? ker.l_max : std::min(l_cap, ker.l_max);
    const double al = std::abs(lam), ax = std::abs(xi);
    int l0 = 0;
    if (al > tab.time_extent())
        l0 = std::max(l0, int(std::ceil(0.5 * std::log2(al / tab.time_extent()))));
    if (ax > tab.space_extent())
        l0 = std::max(l0, int(std::ceil(std::log2(ax / tab.space_extent()))));
    std::complex<double> acc = 0.0;
    for (int l = l0; l <= top; ++l)
        acc += std::ldexp(1.0, -2 * l) * tab.at(std::ldexp(lam, -2 * l), std::ldexp(xi, -l));
    return acc;
}

// Integration cutoffs where the squared mollifier transform is a unit
// gaussian in the hoisted variable: exp(-64) at the edge is far below any
// tolerance in use. The indicator kind decays too slowly in time for that.
double axis_upper_time(const Mollifier& m, int n, int ell) {
    if (m.kind != Mollifier::Kind::gauss_gauss) return HUGE_VAL;
    return std::ldexp(8.0, 2 * (n - ell));
}

double axis_upper_space(int n, int ell) { return std::ldexp(8.0, n - ell); }

void check_var_args(const HurstConfig& hc, const TestFunction& psi, int n, bool spatial) {
    hc.validate();
    if (hc.spatial_only() != spatial)
        throw std::invalid_argument("moment evaluator: Hurst config model mismatch");
    if (psi.d != hc.d) throw std::invalid_argument("moment evaluator: test dimension mismatch");
    if (n < 1) throw std::invalid_argument("moment evaluator: level must be >= 1");
}

std::vector<AxisWeight> spectral_axes(const HurstConfig& hc) {
    std::vector<AxisWeight> axes;
    if (!hc.spatial_only()) axes.push_back({1.0 - 2.0 * *hc.h0, HUGE_VAL, 1.0});
    for (double hi : hc.h) axes.push_back({1.0 - 2.0 * hi, HUGE_VAL, 1.0});
    return axes;
}

} // namespace

double Weight::operator()(const std::vector<double>& x) const {
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    return std::pow(1.0 + std::sqrt(r2), kappa);
}

double pair_first(const LatticeField& field, const TestFunction& psi, int ell, double s,
                  const std::vector<double>& x) {
    if (field.spatial_mode())
        throw std::invalid_argument("pair_first: spatial field, use pair_first_spatial");
    if (psi.d != field.lat.d) throw std::invalid_argument("pair_first: dimension mismatch");
    const Lattice& lat = field.lat;
    SupportGrid g = support_grid(lat, ell, s, x, true);
    ScaledTestFunction sc = scale_translate(psi, std::ldexp(1.0, -ell), s, x);
    double acc = 0.0;
    for (int it = g.it0; it <= g.it1; ++it) {
        const double t = lat.t0 + it * lat.dt;
        if (lat.d == 1) {
            for (int ix = g.ix0[0]; ix <= g.ix1[0]; ++ix) {
                double y = ix * lat.dx;
                acc += field.at(it, ix) * sc.eval(t, &y);
            }
        } else {
            for (int ix = g.ix0[0]; ix <= g.ix1[0]; ++ix)
                for (int iy = g.ix0[1]; iy <= g.ix1[1]; ++iy) {
                    double y[2] = {ix * lat.dx, iy * lat.dx};
                    acc += field.at(it, ix, iy) * sc.eval(t, y);
                }
        }
    }
    return acc * lat.dt * std::pow(lat.dx, lat.d);
}

double pair_first_spatial(const LatticeField& field, const TestFunction& psi, int ell,
                          const std::vector<double>& x) {
    if (!field.spatial_mode())
        throw std::invalid_argument("pair_first_spatial: space-time field, use pair_first");
    if (psi.d != field.lat.d)
        throw std::invalid_argument("pair_first_spatial: dimension mismatch");
    const Lattice& lat = field.lat;
    SupportGrid g = support_grid(lat, ell, 0.0, x, false);
    double acc = 0.0;
    for (int ix = g.ix0[0]; ix <= g.ix1[0]; ++ix)
        for (int iy = g.ix0[1]; iy <= g.ix1[1]; ++iy) {
            double y[2] = {ix * lat.dx, iy * lat.dx};
            acc += field.at(0, ix, iy) * eval_spatial_psi(psi, ell, x, y);
        }
    return acc * std::pow(lat.dx, lat.d);
}

double pair_second_at(const LatticeField& field, double c_n, const TestFunction& psi, int ell,
                      double sb, const std::vector<double>& xb, double sc_t,
                      const std::vector<double>& xc) {
    if (field.spatial_mode())
        throw std::invalid_argument("pair_second_at: spatial field, use pair_second_spatial_at");
    if (field.conv.size() != field.samples.size())
        throw std::invalid_argument("pair_second_at: kernel convolution not cached");
    if (int(xb.size()) != field.lat.d)
        throw std::invalid_argument("pair_second_at: base dimension mismatch");
    const Lattice& lat = field.lat;
    const int itb = node_index(sb, lat.t0, lat.dt, "base time");
    int ixb[2] = {0, 0};
    for (int i = 0; i < lat.d; ++i) ixb[i] = node_index(xb[i], 0.0, lat.dx, "base point");
    SupportGrid g = support_grid(lat, ell, sc_t, xc, true);
    if (itb < field.conv_from || g.it0 < field.conv_from)
        throw std::invalid_argument("pair_second_at: kernel history incomplete on the support");
    const double cb = field.conv_at(itb, ixb[0], ixb[1]);
    ScaledTestFunction sc = scale_translate(psi, std::ldexp(1.0, -ell), sc_t, xc);
    double acc = 0.0;
    for (int it = g.it0; it <= g.it1; ++it) {
        const double t = lat.t0 + it * lat.dt;
        if (lat.d == 1) {
            for (int ix = g.ix0[0]; ix <= g.ix1[0]; ++ix) {
                double y = ix * lat.dx;
                double w2 = (field.conv_at(it, ix) - cb) * field.at(it, ix) - c_n;
                acc += w2 * sc.eval(t, &y);
            }
        } else {
            for (int ix = g.ix0[0]; ix <= g.ix1[0]; ++ix)
                for (int iy = g.ix0[1]; iy <= g.ix1[1]; ++iy) {
                    double y[2] = {ix * lat.dx, iy * lat.dx};
                    double w2 =
                        (field.conv_at(it, ix, iy) - cb) * field.at(it, ix, iy) - c_n;
                    acc += w2 * sc.eval(t, y);
                }
        }
    }
    return acc * lat.dt * std::pow(lat.dx, lat.d);
}

double pair_second_renormalized(const LatticeField& field, double c_n, const TestFunction& psi,
                                int ell, double s, const std::vector<double>& x) {
    return pair_second_at(field, c_n, psi, ell, s, x, s, x);
}

double pair_second_spatial_at(const LatticeField& field, double c_n, const TestFunction& psi,
                              int ell, const std::vector<double>& xb,
                              const std::vector<double>& xc) {
    if (!field.spatial_mode())
        throw std::invalid_argument("pair_second_spatial_at: space-time field");
    if (field.conv.size() != field.samples.size())
        throw std::invalid_argument("pair_second_spatial_at: kernel convolution not cached");
    if (int(xb.size()) != field.lat.d)
        throw std::invalid_argument("pair_second_spatial_at: base dimension mismatch");
    const Lattice& lat = field.lat;
    int ixb[2] = {0, 0};
    for (int i = 0; i < lat.d; ++i) ixb[i] = node_index(xb[i], 0.0, lat.dx, "base point");
    SupportGrid g = support_grid(lat, ell, 0.0, xc, false);
    const double cb = field.conv_at(0, ixb[0], ixb[1]);
    double acc = 0.0;
    for (int ix = g.ix0[0]; ix <= g.ix1[0]; ++ix)
        for (int iy = g.ix0[1]; iy <= g.ix1[1]; ++iy) {
            double y[2] = {ix * lat.dx, iy * lat.dx};
            double w2 = (field.conv_at(0, ix, iy) - cb) * field.at(0, ix, iy) - c_n;
            acc += w2 * eval_spatial_psi(psi, ell, xc, y);
        }
    return acc * std::pow(lat.dx, lat.d);
}

double pair_second_spatial(const LatticeField& field, double c_n, const TestFunction& psi,
                           int ell, const std::vector<double>& x) {
    return pair_second_spatial_at(field, c_n, psi, ell, x, x);
}

namespace {

// shared core of the first-level variance integrals: coefficient times
// |F psi|^2 over the orthant, with the scale hoisted out
double var_first_core(const HurstConfig& hc, const TestFunction& psi, double rtol,
                      const std::function<double(const double*)>& coef2, bool spatial) {
    std::vector<AxisWeight> axes = spectral_axes(hc);
    auto f = [&](const double* u) {
        double p;
        if (spatial) p = std::norm(psi.fourier_spatial(u));
        else p = std::norm(psi.fourier(u[0], u + 1));
        return coef2(u) * p;
    };
    QuadResult r = integrate_singular(f, axes, rtol);
    return std::pow(2.0, double(axes.size())) * c_total2(hc) * r.value;
}

} // namespace

double exact_var_first(const HurstConfig& hc, const Mollifier& m, int n,
                       const TestFunction& psi, int ell, double rtol) {
    return exact_var_first_diff(hc, m, n, 0, psi, ell, rtol);
}

double exact_var_first_diff(const HurstConfig& hc, const Mollifier& m, int n, int mlev,
                            const TestFunction& psi, int ell, double rtol) {
    check_var_args(hc, psi, n, false);
    if (mlev > n) throw std::invalid_argument("exact_var_first_diff: need mlev <= n");
    const int d = hc.d;
    const double hsum = 2.0 * *hc.h0 + hc.hsum();
    const double scale = std::pow(2.0, 2.0 * ell * (d + 2.0 - hsum));
    auto coef2 = [&](const double* u) {
        double es[2], esm[2];
        for (int i = 0; i < d; ++i) {
            es[i] = std::ldexp(u[1 + i], ell - n);
            esm[i] = std::ldexp(u[1 + i], ell - mlev);
        }
        double fn = m.fourier(std::ldexp(u[0], 2 * (ell - n)), es, d).real();
        double fm = mlev == 0 ? 0.0
                              : m.fourier(std::ldexp(u[0], 2 * (ell - mlev)), esm, d).real();
        double df = fn - fm;
        return df * df;
    };
    // mlev = 0 compares against the zero field, giving the plain variance
    return scale * var_first_core(hc, psi, rtol, coef2, false);
}

double exact_var_first_spatial(const HurstConfig& hc, const Mollifier& m, int n,
                               const TestFunction& psi, int ell, double rtol) {
    return exact_var_first_spatial_diff(hc, m, n, 0, psi, ell, rtol);
}

double exact_var_first_spatial_diff(const HurstConfig& hc, const Mollifier& m, int n, int mlev,
                                    const TestFunction& psi, int ell, double rtol) {
    check_var_args(hc, psi, n, true);
    if (mlev > n) throw std::invalid_argument("exact_var_first_spatial_diff: need mlev <= n");
    const int d = hc.d;
    const double scale = std::pow(2.0, 2.0 * ell * (d - hc.hsum()));
    auto coef2 = [&](const double* u) {
        double es[2], esm[2];
        for (int i = 0; i < d; ++i) {
            es[i] = std::ldexp(u[i], ell - n);
            esm[i] = std::ldexp(u[i], ell - mlev);
        }
        double fn = m.fourier_spatial(es, d).real();
        double fm = mlev == 0 ? 0.0 : m.fourier_spatial(esm, d).real();
        double df = fn - fm;
        return df * df;
    };
    return scale * var_first_core(hc, psi, rtol, coef2, true);
}

double kernel_mean_resolved(const HurstConfig& hc, const Mollifier& m, const Fk0Table& tab,
                            int n, int l_cap, double rtol) {
    hc.validate();
    if (hc.spatial_only() || hc.d != 1)
        throw std::invalid_argument("kernel_mean_resolved: d = 1 space-time model required");
    if (n < 1) throw std::invalid_argument("kernel_mean_resolved: level must be >= 1");
    if (l_cap < 0) throw std::invalid_argument("kernel_mean_resolved: need l_cap >= 0");
    // hoist the level out so the mollifier sits at base scale
    const double h0 = *hc.h0, h1 = hc.h[0];
    const double scale =
        std::pow(2.0, 2.0 * n * (2.0 - 2.0 * h0)) * std::pow(2.0, n * (2.0 - 2.0 * h1));
    std::vector<AxisWeight> axes = {{1.0 - 2.0 * h0, axis_upper_time(m, n, n), 1.0},
                                    {1.0 - 2.0 * h1, axis_upper_space(n, n), 1.0}};
    auto f = [&](const double* u) {
        double a2 = m.abs2(u[0], u + 1, 1);
        std::complex<double> fk = 0.0;
        double lam = std::ldexp(u[0], 2 * n), xi = std::ldexp(u[1], n);
        for (int l = 0; l <= l_cap; ++l)
            fk += std::ldexp(1.0, -2 * l) *
                  tab.at(std::ldexp(lam, -2 * l), std::ldexp(xi, -l));
        return a2 * fk.real();
    };
    QuadResult r = integrate_singular(f, axes, rtol);
    return 4.0 * c_total2(hc) * scale * r.value;
}

namespace {

// <Q, psi^ell> for the space-time model, hoisted to base scale: the factor
// 2^{2 ell (d+2-(2H0+H))} times the integral of |F rho_n|^2 FK F psi against
// the spectral weight. Conjugate symmetry folds it onto lam > 0; the kernel
// transform is even in xi, so the xi sign branch only flips the psi factor
// into its conjugate and both branches merge into one integrand.
double q_pairing(const HurstConfig& hc, const Mollifier& m, const LocalizedKernel& ker,
                 const Fk0Table& tab, int n, const TestFunction& psi, int ell, double rtol,
                 int l_cap) {
    const double hsum = 2.0 * *hc.h0 + hc.hsum();
    const double scale = std::pow(2.0, 2.0 * ell * (3.0 - hsum));
    std::vector<AxisWeight> axes = {{1.0 - 2.0 * *hc.h0, axis_upper_time(m, n, ell), 1.0},
                                    {1.0 - 2.0 * hc.h[0], axis_upper_space(n, ell), 1.0}};
    const BumpFactor& f0 = psi.factors[0];
    const BumpFactor& f1 = psi.factors[1];
    auto f = [&](const double* u) {
        double es[1] = {std::ldexp(u[1], ell - n)};
        double a2 = m.abs2(std::ldexp(u[0], 2 * (ell - n)), es, 1);
        if (a2 < 1e-280) return 0.0;
        std::complex<double> fk = fourier_K_capped(ker, tab, std::ldexp(u[0], 2 * ell),
                                                   std::ldexp(u[1], ell), l_cap);
        std::complex<double> fp = f0.fourier(u[0]) * (2.0 * f1.fourier(u[1]).real());
        return a2 * (fk * fp).real();
    };
    return 2.0 * c_total2(hc) * scale * integrate_singular(f, axes, rtol).value;
}

} // namespace

double mean_error_term(const HurstConfig& hc, const Mollifier& m, const LocalizedKernel& ker,
                       const Fk0Table& tab, int n, double c_n, const TestFunction& psi,
                       int ell, double rtol, int l_cap) {
    check_var_args(hc, psi, n, false);
    if (hc.d != 1)
        throw std::invalid_argument("mean_error_term: space-time kernel transforms cover d = 1");
    double kmean = l_cap < 0 ? renorm_constant_kernel(hc, m, ker, tab, n, rtol * 1e-2)
                             : kernel_mean_resolved(hc, m, tab, n, l_cap, rtol * 1e-2);
    double mass = psi.fourier(0.0, std::vector<double>(hc.d, 0.0).data()).real();
    return (kmean - c_n) * mass - q_pairing(hc, m, ker, tab, n, psi, ell, rtol, l_cap);
}

double mean_error_term_spatial(const HurstConfig& hc, const Mollifier& m,
                               const TildeKTransform& tk, int n, double c_n,
                               const TestFunction& psi, int ell, double rtol) {
    check_var_args(hc, psi, n, true);
    if (hc.d != 2)
        throw std::invalid_argument("mean_error_term_spatial: d = 2 required");
    double kmean = renorm_constant_spatial_kernel(hc, m, tk, n, rtol * 1e-2);
    double mass = psi.fourier_spatial(std::vector<double>(2, 0.0).data()).real();

    const double scale = std::pow(2.0, 2.0 * ell * (hc.d - hc.hsum()));
    const double ux = axis_upper_space(n, ell);
    std::vector<AxisWeight> axes = {{1.0 - 2.0 * hc.h[0], ux, 1.0},
                                    {1.0 - 2.0 * hc.h[1], ux, 1.0}};
    const BumpFactor& f1 = psi.factors[1];
    const BumpFactor& f2 = psi.factors[2];
    auto f = [&](const double* u) {
        double es[2] = {std::ldexp(u[0], ell - n), std::ldexp(u[1], ell - n)};
        double a2 = m.abs2_spatial(es, 2);
        if (a2 < 1e-280) return 0.0;
        double fk = tk.at(std::ldexp(u[0], ell), std::ldexp(u[1], ell));
        std::complex<double> fp = f1.fourier(u[0]) * (2.0 * f2.fourier(u[1]).real());
        return a2 * fk * fp.real();
    };
    double q = 2.0 * c_total2(hc) * scale * integrate_singular(f, axes, rtol).value;
    return (kmean - c_n) * mass - q;
}

namespace {

// The two quartic integrals behind the second-level variance. Both live on
// (lam, xi, lam~, xi~) with the scale hoisted out; conjugate symmetry fixes
// lam > 0 and the remaining sign choices become eight branches sharing every
// kernel and factor transform. Nested adaptive quadrature is far too slow in
// four dimensions, so the box holding all coupled terms is summed by a
// panelled tensor Gauss-Legendre rule over precomputed transform grids, and
// the kernel mass escaping the box, which only feeds the term where the
// integrand factorizes, is restored from two-dimensional marginals.
struct QuarticResult {
    double u = 0.0;
    double v = 0.0;
};

std::vector<std::pair<double, double>> legendre_rule(int pts) {
    std::vector<std::pair<double, double>> rule(pts);
    for (int i = 0; i < (pts + 1) / 2; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (pts + 0.5)), dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= pts; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = pts * (x * p1 - p0) / (x * x - 1.0);
            const double step = p1 / dp;
            x -= step;
            if (std::abs(step) < 1e-15) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule[i] = {x, w};
        rule[pts - 1 - i] = {-x, w};
    }
    return rule;
}

struct PanelAxis {
    std::vector<double> x;  // quadrature nodes
    std::vector<double> w;  // weights carrying |x|^gamma and later the envelope
};

// Panelled axis for one hoisted spectral variable. Two dyadic edge ladders
// track the two oscillation scales present: the kernel transform sees its
// argument magnified by 1/fs while the factor transforms sit at base scale.
// Point counts per panel follow the oscillation periods spanned; beyond both
// ladders only smooth kernel decay remains and sparse panels suffice. The
// panel touching zero absorbs |x|^gamma exactly by power substitution.
PanelAxis build_panel_axis(double gamma, double fs, double fine_span, double extent,
                           int tier) {
    if (!(extent > 0.0) || !(fs > 0.0))
        throw std::invalid_argument("build_panel_axis: bad extent or scale");
    std::vector<double> edges{0.0, extent};
    auto push = [&](double v) {
        if (v > 1e-12 * extent && v < extent * (1.0 - 1e-12)) edges.push_back(v);
    };
    for (double v = 16.0 * fs; v < std::min(fine_span * fs, extent); v *= 2.0) push(v);
    for (double v = 16.0; v < extent; v *= 2.0) push(v);
    push(48.0 * fs);
    push(72.0);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end(),
                            [&](double a, double b) { return b - a < 1e-9 * extent; }),
                edges.end());
    const double far_cap[3] = {96.0, 48.0, 32.0};
    const int far_pts[3] = {12, 16, 20};
    PanelAxis ax;
    for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
        const double a = edges[e], b = edges[e + 1];
        double osc = HUGE_VAL;
        if (a < 48.0 * fs) osc = fs;
        else if (a < 72.0) osc = 1.0;
        int chunks = 1, pts = far_pts[tier];
        if (std::isfinite(osc)) {
            const double periods = (b - a) / (2.0 * M_PI * osc);
            chunks = std::max(1, int(std::ceil(periods / 8.5)));
            pts = std::clamp(6 + int(std::ceil(3.2 * periods / chunks)) + 4 * tier, 10, 32);
        } else if (b - a > far_cap[tier]) {
            chunks = int(std::ceil((b - a) / far_cap[tier]));
        }
        const std::vector<std::pair<double, double>> rule = legendre_rule(pts);
        for (int c = 0; c < chunks; ++c) {
            const double pa = a + (b - a) * c / chunks;
            const double pb = a + (b - a) * (c + 1) / chunks;
            if (pa == 0.0) {
                const double g1 = gamma + 1.0, ub = std::pow(pb, g1) / g1;
                for (auto [t, wt] : rule) {
                    const double u = 0.5 * ub * (t + 1.0);
                    ax.x.push_back(std::pow(g1 * u, 1.0 / g1));
                    ax.w.push_back(0.5 * ub * wt);
                }
            } else {
                for (auto [t, wt] : rule) {
                    const double xx = pa + 0.5 * (pb - pa) * (t + 1.0);
                    ax.x.push_back(xx);
                    ax.w.push_back(0.5 * (pb - pa) * wt * std::pow(xx, gamma));
                }
            }
        }
    }
    return ax;
}

struct QuarticGrids {
    int na = 0, nb = 0;
    std::vector<double> wa, wb;
    std::vector<std::complex<double>> kab;       // kernel transform on the node grid
    std::vector<std::complex<double>> f0s, f1s;  // factor transforms at single nodes
    std::vector<std::complex<double>> f0p, f0m;  // factor at node sums and differences
    std::vector<std::complex<double>> f1p, f1m;  // second axis, transposed layout
};

template <class KernelAt, class FacA, class FacB>
QuarticGrids build_quartic_grids(const PanelAxis& A, const PanelAxis& B, KernelAt&& kat,
                                 FacA&& fa, FacB&& fb) {
    QuarticGrids g;
    g.na = int(A.x.size());
    g.nb = int(B.x.size());
    g.wa = A.w;
    g.wb = B.w;
    g.kab.resize(std::size_t(g.na) * g.nb);
    for (int i = 0; i < g.na; ++i)
        for (int j = 0; j < g.nb; ++j)
            g.kab[std::size_t(i) * g.nb + j] = kat(A.x[i], B.x[j]);
    g.f0s.resize(g.na);
    for (int i = 0; i < g.na; ++i) g.f0s[i] = fa(A.x[i]);
    g.f1s.resize(g.nb);
    for (int j = 0; j < g.nb; ++j) g.f1s[j] = fb(B.x[j]);
    g.f0p.resize(std::size_t(g.na) * g.na);
    g.f0m.resize(std::size_t(g.na) * g.na);
    for (int i = 0; i < g.na; ++i)
        for (int k = 0; k < g.na; ++k) {
            g.f0p[std::size_t(i) * g.na + k] = fa(A.x[i] + A.x[k]);
            g.f0m[std::size_t(i) * g.na + k] = fa(A.x[i] - A.x[k]);
        }
    g.f1p.resize(std::size_t(g.nb) * g.nb);
    g.f1m.resize(std::size_t(g.nb) * g.nb);
    for (int l = 0; l < g.nb; ++l)
        for (int j = 0; j < g.nb; ++j) {
            g.f1p[std::size_t(l) * g.nb + j] = fb(B.x[j] + B.x[l]);
            g.f1m[std::size_t(l) * g.nb + j] = fb(B.x[j] - B.x[l]);
        }
    return g;
}

// Branch-summed tensor sums over the quadrature box. The branch bits negate
// xi, lam~, xi~ in turn while lam stays positive; negative arguments only
// ever reach the factor transforms through the precomputed difference grids.
// The global conjugate flip doubling the sum is applied by the caller.
QuarticResult tensor_quartic_sums(const QuarticGrids& g) {
    using C = std::complex<double>;
    const int na = g.na, nb = g.nb;
    double uacc = 0.0, vacc = 0.0;
    std::vector<C> pfst0(nb), pfst1(nb);
    for (int i = 0; i < na; ++i) {
        const C c0l = g.f0s[i];
        for (int j = 0; j < nb; ++j) {
            pfst0[j] = c0l * g.f1s[j];
            pfst1[j] = c0l * std::conj(g.f1s[j]);
        }
        const C* krow1 = &g.kab[std::size_t(i) * nb];
        for (int k = 0; k < na; ++k) {
            const C c0p = g.f0p[std::size_t(i) * na + k];
            const C c0m = g.f0m[std::size_t(i) * na + k];
            const C t00 = g.f0s[k], t01 = std::conj(t00);
            const double wik = g.wa[i] * g.wa[k];
            const C* krow2 = &g.kab[std::size_t(k) * nb];
            for (int l = 0; l < nb; ++l) {
                const C t10 = g.f1s[l], t11 = std::conj(t10);
                const C ptil[4] = {t00 * t10, t00 * t11, t01 * t10, t01 * t11};
                const C fk2 = krow2[l];
                const double wikl = wik * g.wb[l];
                const C* rp = &g.f1p[std::size_t(l) * nb];
                const C* rm = &g.f1m[std::size_t(l) * nb];
                for (int j = 0; j < nb; ++j) {
                    const C fk1 = krow1[j];
                    const C zz[2] = {fk1 * std::conj(fk2), fk1 * fk2};
                    const double w = wikl * g.wb[j];
                    const C f1pv = rp[j], f1mv = rm[j];
                    const C fs1[4] = {f1pv, f1mv, std::conj(f1mv), std::conj(f1pv)};
                    double du = 0.0, dv = 0.0;
                    for (int br = 0; br < 8; ++br) {
                        const int n1 = br & 1, n2 = (br >> 1) & 1, n3 = (br >> 2) & 1;
                        const C psum = (n2 ? c0m : c0p) * fs1[n1 * 2 + n3];
                        const C dU = psum - ptil[n2 * 2 + n3];
                        du += std::norm(dU);
                        const C dV = psum - (n1 ? pfst1[j] : pfst0[j]);
                        dv += (zz[n2] * std::conj(dV) * dU).real();
                    }
                    uacc += w * std::norm(fk1) * du;
                    vacc += w * dv;
                }
            }
        }
    }
    return {uacc, vacc};
}

int quartic_tier(double rtol) { return rtol >= 1e-2 ? 0 : rtol >= 2e-3 ? 1 : 2; }

QuarticResult quartic_integrals(const HurstConfig& hc, const Mollifier& m,
                                const LocalizedKernel& ker, const Fk0Table& tab, int n,
                                const TestFunction& psi, int ell, double rtol, int l_cap) {
    const double hsum = 2.0 * *hc.h0 + hc.hsum();
    const double scale = std::pow(2.0, 4.0 * ell * (3.0 - hsum));
    const double gt = 1.0 - 2.0 * *hc.h0, gx = 1.0 - 2.0 * hc.h[0];
    const double ut = axis_upper_time(m, n, ell), ux = axis_upper_space(n, ell);
    const double bt = std::min(ut, 220.0), bx = std::min(ux, 36.0);
    const int tier = quartic_tier(rtol);
    PanelAxis A = build_panel_axis(gt, std::ldexp(1.0, -2 * ell), 600.0, bt, tier);
    PanelAxis B = build_panel_axis(gx, std::ldexp(1.0, -ell), 64.0, bx, tier);
    for (std::size_t i = 0; i < A.x.size(); ++i) {
        const double tf = m.time_factor_abs(std::ldexp(A.x[i], 2 * (ell - n)));
        A.w[i] *= tf * tf;
    }
    for (std::size_t j = 0; j < B.x.size(); ++j) {
        const double sf = std::ldexp(B.x[j], ell - n);
        B.w[j] *= std::exp(-sf * sf);
    }
    const BumpFactor& f0 = psi.factors[0];
    const BumpFactor& f1 = psi.factors[1];
    QuarticGrids g = build_quartic_grids(
        A, B,
        [&](double la, double xb) {
            return fourier_K_capped(ker, tab, std::ldexp(la, 2 * ell),
                                    std::ldexp(xb, ell), l_cap);
        },
        [&](double v) { return f0.fourier(v); }, [&](double v) { return f1.fourier(v); });
    QuarticResult raw = tensor_quartic_sums(g);
    if (bt < ut || bx < ux) {
        auto kmass = [&](double at, double ax2) {
            std::vector<AxisWeight> axes = {{gt, at, 1.0}, {gx, ax2, 1.0}};
            auto f = [&](const double* q) {
                double es[1] = {std::ldexp(q[1], ell - n)};
                const double a2 = m.abs2(std::ldexp(q[0], 2 * (ell - n)), es, 1);
                if (a2 < 1e-280) return 0.0;
                return a2 * std::norm(fourier_K_capped(ker, tab, std::ldexp(q[0], 2 * ell),
                                                       std::ldexp(q[1], ell), l_cap));
            };
            return integrate_singular(f, axes, 1e-4).value;
        };
        const double dm0 = kmass(ut, ux) - kmass(bt, bx);
        std::vector<AxisWeight> axes = {{gt, bt, 1.0}, {gx, bx, 1.0}};
        auto f = [&](const double* q) {
            double es[1] = {std::ldexp(q[1], ell - n)};
            const double a2 = m.abs2(std::ldexp(q[0], 2 * (ell - n)), es, 1);
            return a2 * std::norm(f0.fourier(q[0])) * std::norm(f1.fourier(q[1]));
        };
        raw.u += 8.0 * dm0 * integrate_singular(f, axes, 1e-4).value;
    }
    const double c4 = c_total2(hc) * c_total2(hc);
    return {2.0 * c4 * scale * raw.u, 2.0 * c4 * scale * raw.v};
}

QuarticResult quartic_integrals_spatial(const HurstConfig& hc, const Mollifier& m,
                                        const TildeKTransform& tk, int n,
                                        const TestFunction& psi, int ell, double rtol) {
    const double scale = std::pow(2.0, 4.0 * ell * (hc.d - hc.hsum()));
    const double g1 = 1.0 - 2.0 * hc.h[0], g2 = 1.0 - 2.0 * hc.h[1];
    const double ux = axis_upper_space(n, ell);
    const double bx = std::min(ux, 36.0);
    const int tier = quartic_tier(rtol);
    const double fs = std::ldexp(1.0, -ell);
    PanelAxis A = build_panel_axis(g1, fs, 64.0, bx, tier);
    PanelAxis B = build_panel_axis(g2, fs, 64.0, bx, tier);
    auto fold_envelope = [&](PanelAxis& ax) {
        for (std::size_t i = 0; i < ax.x.size(); ++i) {
            const double sf = std::ldexp(ax.x[i], ell - n);
            ax.w[i] *= std::exp(-sf * sf);
        }
    };
    fold_envelope(A);
    fold_envelope(B);
    const BumpFactor& f1 = psi.factors[1];
    const BumpFactor& f2 = psi.factors[2];
    // the time-integrated transform is real and even in each axis, so the
    // complex core degenerates to the right sign algebra on its own
    QuarticGrids g = build_quartic_grids(
        A, B,
        [&](double xa, double xb) {
            return std::complex<double>(
                tk.at(std::ldexp(xa, ell), std::ldexp(xb, ell)), 0.0);
        },
        [&](double v) { return f1.fourier(v); }, [&](double v) { return f2.fourier(v); });
    QuarticResult raw = tensor_quartic_sums(g);
    if (bx < ux) {
        auto kmass = [&](double up) {
            std::vector<AxisWeight> axes = {{g1, up, 1.0}, {g2, up, 1.0}};
            auto f = [&](const double* q) {
                double es[2] = {std::ldexp(q[0], ell - n), std::ldexp(q[1], ell - n)};
                const double a2 = m.abs2_spatial(es, 2);
                if (a2 < 1e-280) return 0.0;
                const double fk = tk.at(std::ldexp(q[0], ell), std::ldexp(q[1], ell));
                return a2 * fk * fk;
            };
            return integrate_singular(f, axes, 1e-4).value;
        };
        const double dm0 = kmass(ux) - kmass(bx);
        std::vector<AxisWeight> axes = {{g1, bx, 1.0}, {g2, bx, 1.0}};
        auto f = [&](const double* q) {
            double es[2] = {std::ldexp(q[0], ell - n), std::ldexp(q[1], ell - n)};
            const double a2 = m.abs2_spatial(es, 2);
            return a2 * std::norm(f1.fourier(q[0])) * std::norm(f2.fourier(q[1]));
        };
        raw.u += 8.0 * dm0 * integrate_singular(f, axes, 1e-4).value;
    }
    const double c4 = c_total2(hc) * c_total2(hc);
    return {2.0 * c4 * scale * raw.u, 2.0 * c4 * scale * raw.v};
}

} // namespace

SecondMoment exact_var_second(const HurstConfig& hc, const Mollifier& m,
                              const LocalizedKernel& ker, const Fk0Table& tab, int n,
                              double c_n, const TestFunction& psi, int ell, double rtol,
                              int l_cap) {
    check_var_args(hc, psi, n, false);
    if (hc.d != 1)
        throw std::invalid_argument(
            "exact_var_second: space-time kernel transforms cover d = 1");
    SecondMoment sm;
    sm.mean = mean_error_term(hc, m, ker, tab, n, c_n, psi, ell,
                              std::min(rtol, 1e-4), l_cap);
    QuarticResult q = quartic_integrals(hc, m, ker, tab, n, psi, ell, rtol, l_cap);
    sm.u = q.u;
    sm.v = q.v;
    return sm;
}

SecondMoment exact_var_second_spatial(const HurstConfig& hc, const Mollifier& m,
                                      const TildeKTransform& tk, int n, double c_n,
                                      const TestFunction& psi, int ell, double rtol) {
    check_var_args(hc, psi, n, true);
    if (hc.d != 2)
        throw std::invalid_argument("exact_var_second_spatial: d = 2 required");
    SecondMoment sm;
    sm.mean = mean_error_term_spatial(hc, m, tk, n, c_n, psi, ell, std::min(rtol, 1e-4));
    QuarticResult q = quartic_integrals_spatial(hc, m, tk, n, psi, ell, rtol);
    sm.u = q.u;
    sm.v = q.v;
    return sm;
}

KRoughPathSample build_krough_sample(const LatticeField& field, double c_n,
                                     const std::vector<TestFunction>& psis, int ell_min,
                                     int ell_max, int base_depth, double s0, double T) {
    if (field.spatial_mode())
        throw std::invalid_argument("build_krough_sample: space-time field required");
    if (field.conv.size() != field.samples.size())
        throw std::invalid_argument("build_krough_sample: kernel convolution not cached");
    if (ell_min < 0 || ell_max < ell_min)
        throw std::invalid_argument("build_krough_sample: bad scale range");
    const Lattice& lat = field.lat;
    const double rad = 0.5 * lat.box();
    std::vector<std::pair<double, double>> box(lat.d, {-rad, rad});

    KRoughPathSample out;
    out.level = field.level;
    out.c_n = c_n;
    out.npsi = psis.size();
    const double conv_start = lat.t0 + field.conv_from * lat.dt;
    for (int ell = ell_min; ell <= ell_max; ++ell) {
        const double delta = std::ldexp(1.0, -ell);
        ScalePairings sp;
        sp.ell = ell;
        for (const LatticePoint& p : dyadic_lattice(std::min(ell, base_depth), T, box)) {
            const double s = s0 + p.t;
            bool ok = s - delta * delta >= conv_start - kTol &&
                      s + delta * delta <= lat.t_end() + kTol;
            for (int i = 0; i < lat.d && ok; ++i) {
                double xa = rad + p.x[i];
                ok = xa - delta >= -kTol && xa + delta <= (lat.nx - 1) * lat.dx + kTol;
            }
            if (!ok) continue;  // boundary-touching supports are dropped, not wrapped
            sp.base.push_back(p);
        }
        if (sp.base.empty())
            throw std::invalid_argument(
                "build_krough_sample: no admissible base point at a scale, enlarge the "
                "lattice or narrow the scale range");
        sp.first.assign(psis.size(), std::vector<double>(sp.base.size(), 0.0));
        sp.second.assign(psis.size(), std::vector<double>(sp.base.size(), 0.0));
        for (std::size_t ip = 0; ip < psis.size(); ++ip)
            for (std::size_t ib = 0; ib < sp.base.size(); ++ib) {
                const LatticePoint& p = sp.base[ib];
                double s = s0 + p.t;
                std::vector<double> xa(lat.d);
                for (int i = 0; i < lat.d; ++i) xa[i] = rad + p.x[i];
                sp.first[ip][ib] = pair_first(field, psis[ip], ell, s, xa);
                sp.second[ip][ib] =
                    pair_second_renormalized(field, c_n, psis[ip], ell, s, xa);
            }
        out.scales.push_back(std::move(sp));
    }
    return out;
}

namespace {

double besov_sup(const KRoughPathSample& sample, int level, double alpha, const Weight& w,
                 double T, double x_radius) {
    double sup = 0.0;
    for (const ScalePairings& sp : sample.scales) {
        const double fac = level == 1 ? std::pow(2.0, sp.ell * alpha)
                                      : std::pow(2.0, sp.ell * (2.0 * alpha + 2.0));
        for (std::size_t ip = 0; ip < sample.npsi; ++ip)
            for (std::size_t ib = 0; ib < sp.base.size(); ++ib) {
                const LatticePoint& p = sp.base[ib];
                if (std::abs(p.t) > T + kTol) continue;
                double r2 = 0.0;
                for (double v : p.x) r2 += v * v;
                if (x_radius > 0.0 && std::sqrt(r2) > x_radius + kTol) continue;
                double ww = w(p.x);
                double val = (level == 1 ? std::abs(sp.first[ip][ib]) / ww
                                         : std::abs(sp.second[ip][ib]) / (ww * ww));
                sup = std::max(sup, fac * val);
            }
    }
    return sup;
}

} // namespace

double besov_norm_estimate(const KRoughPathSample& sample, int level, double alpha,
                           const Weight& w, double T) {
    if (level != 1 && level != 2)
        throw std::invalid_argument("besov_norm_estimate: level must be 1 or 2");
    return besov_sup(sample, level, alpha, w, T, 0.0);
}

std::vector<CauchyRow> cauchy_study(const HurstConfig& hc, const Mollifier& m,
                                    const LocalizedKernel& ker, const CauchyConfig& cfg) {
    hc.validate();
    if (hc.spatial_only() || hc.d != 1)
        throw std::invalid_argument("cauchy_study: d = 1 space-time model required");
    if (cfg.levels.size() < 2 || !std::is_sorted(cfg.levels.begin(), cfg.levels.end()))
        throw std::invalid_argument("cauchy_study: need ascending levels");
    if (cfg.replicas < 1) throw std::invalid_argument("cauchy_study: need replicas");

    const int lres = resolved_kernel_levels(cfg.lat, ker.l_max);
    Fk0Table tab = build_fk0_table(ker);
    std::vector<double> c_n(cfg.levels.size());
    for (std::size_t i = 0; i < cfg.levels.size(); ++i)
        c_n[i] = kernel_mean_resolved(hc, m, tab, cfg.levels[i], lres, 1e-7);

    const std::vector<TestFunction> psis = TestFunction::family(hc.d);
    // window center: past the kernel warm-up plus the coarsest support radius
    const double s0 = cfg.lat.t0 + 1.0 + cfg.T + std::ldexp(1.0, -2 * cfg.ell_min);
    const int nlev = int(cfg.levels.size());
    const int nell = cfg.ell_max - cfg.ell_min + 1;
    const Weight w{cfg.kappa};

    std::vector<CauchyRow> rows(nlev);
    for (int i = 0; i < nlev; ++i) {
        rows[i].n = cfg.levels.back();
        rows[i].mlev = cfg.levels[i];
        rows[i].msq_first.assign(nell, 0.0);
        rows[i].msq_second.assign(nell, 0.0);
    }
    std::vector<long> counts(nell, 0);

    for (int r = 0; r < cfg.replicas; ++r) {
        std::uint64_t sd = derive_seed(cfg.seed, std::uint64_t(r));
        std::vector<KRoughPathSample> samples;
        for (std::size_t i = 0; i < cfg.levels.size(); ++i) {
            LatticeField f = sample_field(hc, m, cfg.levels[i], cfg.lat, sd);
            convolve_K(f, ker);
            samples.push_back(build_krough_sample(f, c_n[i], psis, cfg.ell_min, cfg.ell_max,
                                                  cfg.base_depth, s0, cfg.T));
        }
        const KRoughPathSample& ref = samples.back();
        for (int i = 0; i < nlev; ++i) {
            // difference sample: shared bases, pairing gaps slot for slot
            KRoughPathSample diff = ref;
            for (std::size_t sc = 0; sc < diff.scales.size(); ++sc)
                for (std::size_t ip = 0; ip < diff.npsi; ++ip)
                    for (std::size_t ib = 0; ib < diff.scales[sc].base.size(); ++ib) {
                        diff.scales[sc].first[ip][ib] -= samples[i].scales[sc].first[ip][ib];
                        diff.scales[sc].second[ip][ib] -=
                            samples[i].scales[sc].second[ip][ib];
                    }
            double q1 = besov_norm_estimate(diff, 1, cfg.alpha, w, cfg.T);
            double q2 = besov_norm_estimate(diff, 2, cfg.alpha, w, cfg.T);
            rows[i].first_norm += q1 / cfg.replicas;
            rows[i].second_norm += q2 / cfg.replicas;
            double dist = 0.0;
            for (int k = 1; k <= cfg.k_max; ++k) {
                double qk = besov_sup(diff, 1, cfg.alpha, w, cfg.T, double(k)) +
                            besov_sup(diff, 2, cfg.alpha, w, cfg.T, double(k));
                dist += std::ldexp(1.0, -k) * qk / (1.0 + qk);
            }
            rows[i].distance += dist / cfg.replicas;
            for (std::size_t sc = 0; sc < diff.scales.size(); ++sc)
                for (std::size_t ip = 0; ip < diff.npsi; ++ip)
                    for (std::size_t ib = 0; ib < diff.scales[sc].base.size(); ++ib) {
                        double a = diff.scales[sc].first[ip][ib];
                        double b = diff.scales[sc].second[ip][ib];
                        rows[i].msq_first[sc] += a * a;
                        rows[i].msq_second[sc] += b * b;
                        if (i == 0) counts[sc]++;
                    }
        }
    }
    for (int i = 0; i < nlev; ++i)
        for (int sc = 0; sc < nell; ++sc)
            if (counts[sc] > 0) {
                rows[i].msq_first[sc] /= double(counts[sc]);
                rows[i].msq_second[sc] /= double(counts[sc]);
            }
    return rows;
}

} // namespace krp
