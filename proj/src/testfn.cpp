#include "krp/testfn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "krp/quad.hpp"

namespace krp {

namespace {

std::complex<double> cis(double t) { return {std::cos(t), std::sin(t)}; }

double sinc(double x) {
    if (std::abs(x) < 1e-4) {
        double x2 = x * x;
        return 1.0 - x2 / 6.0 * (1.0 - x2 / 20.0);
    }
    return std::sin(x) / x;
}

double binom(int n, int j) {
    double v = 1.0;
    for (int i = 1; i <= j; ++i) v *= double(n - j + i) / double(i);
    return v;
}

double horner(const std::vector<double>& coef, double v) {
    double acc = 0.0;
    for (std::size_t p = coef.size(); p-- > 0;) acc = acc * v + coef[p];
    return acc;
}

// golden-section polish of a local maximum of g on [a, b]
double refine_max(const std::function<double(double)>& g, double a, double b) {
    const double gr = 0.6180339887498949;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = g(x1), f2 = g(x2);
    for (int it = 0; it < 90; ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = g(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = g(x1);
        }
    }
    return std::max(f1, f2);
}

// E(w) = int_0^1 e^{-iwt} dt = e^{-iw/2} sinc(w/2); |E^{(k)}| <= 1/(k+1)
std::complex<double> Efun(double w) { return cis(-0.5 * w) * sinc(0.5 * w); }

std::complex<double> Eprime(double w) {
    if (std::abs(w) < 0.5) {
        std::complex<double> acc = 0.0;
        std::complex<double> p = {0.0, -1.0};  // (-i)^k
        double wp = 1.0, fct = 2.0;            // w^{k-1}, (k+1)!
        for (int k = 1; k <= 16; ++k) {
            acc += double(k) * p * wp / fct;
            p *= std::complex<double>(0.0, -1.0);
            wp *= w;
            fct *= double(k + 2);
        }
        return acc;
    }
    std::complex<double> e = cis(-w);
    return (w * e + std::complex<double>(0.0, 1.0) * (1.0 - e)) / (w * w);
}

} // namespace

double bump_fourier_base(int k, double omega) {
    double om = std::abs(omega);
    if (om <= 2.0) {
        // sum_m (-1)^m om^{2m}/(2m)! * int v^{2m}(1-v^2)^k dv, by term recurrence
        double term = std::exp(std::lgamma(0.5) + std::lgamma(k + 1.0) - std::lgamma(k + 1.5));
        double acc = term;
        for (int m = 0; m < 40; ++m) {
            term *= -om * om / double((2 * m + 1) * (2 * m + 2)) * (m + 0.5) / (m + k + 1.5);
            acc += term;
            if (std::abs(term) < 1e-18 * std::abs(acc)) break;
        }
        return acc;
    }
    double logpre = 0.5 * std::log(M_PI) + std::lgamma(k + 1.0) + (k + 0.5) * std::log(2.0 / om);
    return std::exp(logpre) * std::cyl_bessel_j(k + 0.5, om);
}

double BumpFactor::eval(double u, int order) const {
    if (u < lo() || u > hi()) return 0.0;
    double v = s * u + c;
    if (order >= static_cast<int>(dcoef.size()))
        throw std::invalid_argument("BumpFactor: derivative order beyond the prepared table");
    if (order == 0) {
        double b = horner(dcoef[0], v);
        return amp * b * (w == 0.0 ? 1.0 : std::cos(w * u));
    }
    double acc = 0.0;
    for (int j = 0; j <= order; ++j) {
        int m = order - j;
        if (w == 0.0 && m != 0) continue;
        double db = horner(dcoef[j], v);
        double trig = (m == 0 && w == 0.0) ? 1.0 : std::cos(w * u + 0.5 * M_PI * m);
        acc += binom(order, j) * std::pow(s, j) * db * std::pow(w, double(m)) * trig;
    }
    return amp * acc;
}

std::complex<double> BumpFactor::fourier(double omega) const {
    auto G = [&](double om) {
        return (1.0 / s) * cis(om * c / s) * bump_fourier_base(k, om / s);
    };
    if (w == 0.0) return amp * G(omega);
    return amp * 0.5 * (G(omega - w) + G(omega + w));
}

double BumpFactor::sup_deriv(int order) const {
    const int n = 2048;
    double a = lo(), b = hi(), step = (b - a) / n;
    double best = 0.0;
    int where = 0;
    for (int i = 0; i <= n; ++i) {
        double g = std::abs(eval(a + i * step, order));
        if (g > best) {
            best = g;
            where = i;
        }
    }
    double la = a + std::max(0, where - 1) * step;
    double lb = a + std::min(n, where + 1) * step;
    auto g = [&](double u) { return std::abs(eval(u, order)); };
    return std::max(best, refine_max(g, la, lb));
}

double BumpFactor::abs_l1(int order) const {
    auto g = [&](double u) { return std::abs(eval(u, order)); };
    return adaptive_gk(g, lo(), hi(), 1e-10, 1e-15, 8000).value;
}

namespace {

BumpFactor make_factor(int k, int norm_order, double s, double c, double w) {
    if (k < norm_order + 1)
        throw std::invalid_argument("BumpFactor: need k >= norm order + 1 for boundary decay");
    BumpFactor f;
    f.k = k;
    f.s = s;
    f.c = c;
    f.w = w;
    std::vector<double> base(2 * k + 1, 0.0);
    for (int j = 0; j <= k; ++j) base[2 * j] = binom(k, j) * ((j % 2) ? -1.0 : 1.0);
    f.dcoef.push_back(base);
    for (int a = 1; a <= norm_order; ++a) {
        const auto& prev = f.dcoef.back();
        std::vector<double> nxt(std::max<std::size_t>(prev.size() - 1, 1), 0.0);
        for (std::size_t p = 1; p < prev.size(); ++p) nxt[p - 1] = prev[p] * double(p);
        f.dcoef.push_back(std::move(nxt));
    }
    double m = 0.0;
    for (int a = 0; a <= norm_order; ++a) m = std::max(m, f.sup_deriv(a));
    f.amp = (1.0 - 1e-9) / m;
    return f;
}

} // namespace

BumpFactor BumpFactor::plain(int k, int norm_order) { return make_factor(k, norm_order, 1, 0, 0); }

BumpFactor BumpFactor::affine(int k, int norm_order, double s, double c) {
    return make_factor(k, norm_order, s, c, 0);
}

BumpFactor BumpFactor::modulated(int k, int norm_order, double w) {
    return make_factor(k, norm_order, 1, 0, w);
}

double TestFunction::eval(double t, const double* x) const {
    double v = factors[0].eval(t, 0);
    for (int i = 1; i <= d && v != 0.0; ++i) v *= factors[i].eval(x[i - 1], 0);
    return v;
}

double TestFunction::mixed_first_deriv(double t, const double* x) const {
    double v = factors[0].eval(t, 1);
    for (int i = 1; i <= d && v != 0.0; ++i) v *= factors[i].eval(x[i - 1], 1);
    return v;
}

std::complex<double> TestFunction::fourier(double lam, const double* xi) const {
    std::complex<double> v = factors[0].fourier(lam);
    for (int i = 1; i <= d; ++i) v *= factors[i].fourier(xi[i - 1]);
    return v;
}

std::complex<double> TestFunction::fourier_spatial(const double* xi) const {
    std::complex<double> v = 1.0;
    for (int i = 1; i <= d; ++i) v *= factors[i].fourier(xi[i - 1]);
    return v;
}

double TestFunction::c_norm() const {
    const int L = cnorm_order();
    std::vector<double> best(L + 1, 0.0);
    double run = 0.0;
    for (int a = 0; a <= L; ++a) {
        run = std::max(run, factors[0].sup_deriv(a));
        best[a] = run;
    }
    for (int j = 1; j <= d; ++j) {
        std::vector<double> sup(L + 1);
        for (int a = 0; a <= L; ++a) sup[a] = factors[j].sup_deriv(a);
        std::vector<double> nxt(L + 1, 0.0);
        for (int m = 0; m <= L; ++m)
            for (int a = 0; a <= m; ++a) nxt[m] = std::max(nxt[m], best[m - a] * sup[a]);
        for (int m = 1; m <= L; ++m) nxt[m] = std::max(nxt[m], nxt[m - 1]);
        best = std::move(nxt);
    }
    return best[L];
}

namespace {

// scale all factor amplitudes uniformly so the tensor sits just inside the
// unit ball of the derivative norm
void rescale_to_unit_ball(TestFunction& psi) {
    double r = std::pow((1.0 - 1e-9) / psi.c_norm(), 1.0 / (psi.d + 1));
    for (auto& f : psi.factors) f.amp *= r;
}

} // namespace

TestFunction TestFunction::tensor_bump(int d, int k) {
    if (d < 1) throw std::invalid_argument("TestFunction: d must be >= 1");
    TestFunction psi;
    psi.d = d;
    psi.k = k;
    BumpFactor f = BumpFactor::plain(k, psi.cnorm_order());
    psi.factors.assign(d + 1, f);
    rescale_to_unit_ball(psi);
    return psi;
}

TestFunction TestFunction::variant(int d, int k) {
    TestFunction psi = tensor_bump(d, k);
    psi.factors[0] = BumpFactor::modulated(k, psi.cnorm_order(), 3.0);
    psi.factors[1] = BumpFactor::affine(k, psi.cnorm_order(), 2.0, 1.0);
    rescale_to_unit_ball(psi);
    return psi;
}

std::vector<TestFunction> TestFunction::family(int d) {
    int k0 = 2 * (d + 1) + 1;
    return {tensor_bump(d, k0), tensor_bump(d, k0 + 2), tensor_bump(d, k0 + 4), variant(d, k0)};
}

double ScaledTestFunction::eval(double t, const double* y) const {
    double inv = 1.0 / delta;
    std::vector<double> z(psi.d);
    for (int i = 0; i < psi.d; ++i) z[i] = inv * (y[i] - x[i]);
    return std::pow(inv, psi.d + 2) * psi.eval(inv * inv * (t - s), z.data());
}

std::complex<double> ScaledTestFunction::fourier(double lam, const double* xi) const {
    double phase = lam * s;
    std::vector<double> z(psi.d);
    for (int i = 0; i < psi.d; ++i) {
        phase += xi[i] * x[i];
        z[i] = delta * xi[i];
    }
    return cis(-phase) * psi.fourier(delta * delta * lam, z.data());
}

ScaledTestFunction scale_translate(const TestFunction& psi, double delta, double s,
                                   const std::vector<double>& x) {
    if (!(delta > 0.0 && delta <= 1.0))
        throw std::invalid_argument("scale_translate: delta outside (0,1]");
    if (static_cast<int>(x.size()) != psi.d)
        throw std::invalid_argument("scale_translate: center dimension mismatch");
    return {psi, delta, s, x};
}

std::vector<LatticePoint> dyadic_lattice(int n, double T,
                                         const std::vector<std::pair<double, double>>& box) {
    if (n < 0) throw std::invalid_argument("dyadic_lattice: level must be >= 0");
    if (T < 0.0 || box.empty()) throw std::invalid_argument("dyadic_lattice: empty domain");
    for (auto [lo, hi] : box)
        if (lo > hi) throw std::invalid_argument("dyadic_lattice: empty box");
    const double dt = std::pow(2.0, -2 * n), dx = std::pow(2.0, -n);
    auto range = [](double lo, double hi, double step) {
        long long kmin = static_cast<long long>(std::ceil(lo / step - 1e-9));
        long long kmax = static_cast<long long>(std::floor(hi / step + 1e-9));
        std::vector<double> out;
        for (long long kk = kmin; kk <= kmax; ++kk) out.push_back(kk * step);
        return out;
    };
    std::vector<double> times = range(-T, T, dt);
    std::vector<std::vector<double>> axes;
    for (auto [lo, hi] : box) axes.push_back(range(lo, hi, dx));
    std::vector<LatticePoint> pts;
    std::vector<std::size_t> idx(axes.size(), 0);
    for (double t : times) {
        std::fill(idx.begin(), idx.end(), 0);
        while (true) {
            LatticePoint p;
            p.t = t;
            for (std::size_t a = 0; a < axes.size(); ++a) p.x.push_back(axes[a][idx[a]]);
            pts.push_back(std::move(p));
            std::size_t a = 0;
            while (a < axes.size() && ++idx[a] == axes[a].size()) idx[a++] = 0;
            if (a == axes.size()) break;
        }
    }
    return pts;
}

std::complex<double> osc1(double y, double lam) {
    double w = lam * y;
    return y * Efun(w);
}

std::complex<double> osc2(double y, double lam, double lamt) {
    double a = lamt * y, b = (lam + lamt) * y, h = b - a;
    std::complex<double> dd;
    double scale = std::min(1.0, 2.5 / (1.0 + std::min(std::abs(a), std::abs(b))));
    if (std::abs(h) >= 4e-3 * scale) {
        dd = (Efun(b) - Efun(a)) / h;
    } else {
        // Simpson applied to the integral form of the divided difference
        dd = (Eprime(a) + 4.0 * Eprime(0.5 * (a + b)) + Eprime(b)) / 6.0;
    }
    return std::complex<double>(0.0, 1.0) * (y * y) * dd;
}

namespace {

void check_axis(const TestFunction& psi, int i, bool spatial) {
    if (i < 0 || i > psi.d) throw std::invalid_argument("oscillatory functional: axis out of range");
    if (spatial && i == 0)
        throw std::invalid_argument("oscillatory functional: no time axis in spatial mode");
}

double tq_prefactor(const TestFunction& psi, int i, bool spatial) {
    double pre = 1.0;
    for (int j = spatial ? 1 : 0; j <= psi.d; ++j)
        if (j != i) pre *= psi.factors[j].abs_l1(1);
    return pre;
}

} // namespace

double T_functional(const TestFunction& psi, int i, double lambda, bool spatial) {
    check_axis(psi, i, spatial);
    const int p = spatial ? psi.d : psi.d + 1;
    const BumpFactor& fi = psi.factors[i];
    auto g = [&](double u) {
        return std::abs(fi.eval(u, 1)) * std::pow(std::abs(osc1(u, lambda)), double(p));
    };
    QuadResult r = adaptive_gk(g, fi.lo(), fi.hi(), 1e-9, 1e-15, 8000);
    return std::pow(tq_prefactor(psi, i, spatial) * r.value, 1.0 / p);
}

double Q_functional(const TestFunction& psi, int i, double lambda, double lambda_tilde,
                    bool spatial) {
    check_axis(psi, i, spatial);
    const int p = spatial ? psi.d : psi.d + 1;
    const BumpFactor& fi = psi.factors[i];
    auto g = [&](double u) {
        return std::abs(fi.eval(u, 1)) * std::pow(std::abs(osc2(u, lambda, lambda_tilde)), double(p));
    };
    QuadResult r = adaptive_gk(g, fi.lo(), fi.hi(), 1e-9, 1e-15, 8000);
    return std::pow(tq_prefactor(psi, i, spatial) * r.value, 1.0 / p);
}

namespace {

// T^2 sampled on an asinh-spaced grid, Catmull-Rom interpolated, even in x
struct TsqTable {
    double umax = 1.0;
    std::vector<double> v;

    double at(double x) const {
        const int n = static_cast<int>(v.size());
        double u = std::asinh(std::abs(x));
        double t = u / umax * (n - 1);
        if (t >= n - 1) return v.back();
        int j = static_cast<int>(t);
        double f = t - j;
        double vm = (j >= 1) ? v[j - 1] : v[1];  // even reflection at 0
        double vp = (j + 2 <= n - 1) ? v[j + 2] : v[n - 1];
        double m0 = 0.5 * (v[j + 1] - vm), m1 = 0.5 * (vp - v[j]);
        double f2 = f * f, f3 = f2 * f;
        return (2 * f3 - 3 * f2 + 1) * v[j] + (f3 - 2 * f2 + f) * m0 +
               (-2 * f3 + 3 * f2) * v[j + 1] + (f3 - f2) * m1;
    }
};

TsqTable build_tsq(const TestFunction& psi, int i, bool spatial, double xmax, int n) {
    const int p = spatial ? psi.d : psi.d + 1;
    const double pre = tq_prefactor(psi, i, spatial);
    const BumpFactor& fi = psi.factors[i];
    TsqTable tab;
    tab.umax = std::asinh(xmax);
    tab.v.resize(n);
    for (int j = 0; j < n; ++j) {
        double x = std::sinh(tab.umax * j / (n - 1));
        auto g = [&](double u) {
            return std::abs(fi.eval(u, 1)) * std::pow(std::abs(osc1(u, x)), double(p));
        };
        double val = pre * adaptive_gk(g, fi.lo(), fi.hi(), 1e-6, 1e-14, 3000).value;
        tab.v[j] = std::pow(val, 2.0 / p);
    }
    return tab;
}

// |Q|^2 on x1 >= 0, signed x2, bilinear in asinh coordinates
struct QsqTable {
    double u1max = 1.0, u2max = 1.0;
    int n1 = 0, n2 = 0;
    std::vector<double> v;  // row-major [i1][i2]

    double at(double x1, double x2) const {
        double t1 = std::asinh(std::max(x1, 0.0)) / u1max * (n1 - 1);
        double t2 = (std::asinh(x2) + u2max) / (2.0 * u2max) * (n2 - 1);
        t1 = std::clamp(t1, 0.0, double(n1 - 1) - 1e-12);
        t2 = std::clamp(t2, 0.0, double(n2 - 1) - 1e-12);
        int i1 = static_cast<int>(t1), i2 = static_cast<int>(t2);
        double f1 = t1 - i1, f2 = t2 - i2;
        auto V = [&](int a, int b) { return v[a * n2 + b]; };
        return (1 - f1) * ((1 - f2) * V(i1, i2) + f2 * V(i1, i2 + 1)) +
               f1 * ((1 - f2) * V(i1 + 1, i2) + f2 * V(i1 + 1, i2 + 1));
    }
};

QsqTable build_qsq(const TestFunction& psi, int i, double xmax, int n1, int n2) {
    const int p = psi.d + 1;
    const double pre = tq_prefactor(psi, i, false);
    const BumpFactor& fi = psi.factors[i];
    QsqTable tab;
    tab.u1max = std::asinh(xmax);
    tab.u2max = std::asinh(xmax);
    tab.n1 = n1;
    tab.n2 = n2;
    tab.v.resize(std::size_t(n1) * n2);
    for (int a = 0; a < n1; ++a) {
        double x1 = std::sinh(tab.u1max * a / (n1 - 1));
        for (int b = 0; b < n2; ++b) {
            double x2 = std::sinh(-tab.u2max + 2.0 * tab.u2max * b / (n2 - 1));
            auto g = [&](double u) {
                return std::abs(fi.eval(u, 1)) * std::pow(std::abs(osc2(u, x1, x2)), double(p));
            };
            double val = pre * adaptive_gk(g, fi.lo(), fi.hi(), 1e-6, 1e-13, 2000).value;
            tab.v[std::size_t(a) * n2 + b] = std::pow(val, 2.0 / p);
        }
    }
    return tab;
}

// Weighted box integral of |x1|^g1 |x2|^g2 G(x1,x2) over [a1,b1] x [a2,b2] by a
// fixed midpoint product rule; axes starting at 0 run in power-substituted
// coordinates so the singular weight is absorbed. G here is an interpolated
// table, so a fixed rule beats chasing interpolation kinks adaptively.
double rect2(const std::function<double(double, double)>& G, double g1, double a1, double b1,
             double g2, double a2, double b2) {
    const int n = 320;
    auto nodes = [&](double g, double a, double b, std::vector<double>& x,
                     std::vector<double>& wgt) {
        x.resize(n);
        wgt.resize(n);
        if (a == 0.0) {
            double U = std::pow(b, g + 1.0) / (g + 1.0), du = U / n;
            for (int j = 0; j < n; ++j) {
                double u = (j + 0.5) * du;
                x[j] = std::pow((g + 1.0) * u, 1.0 / (g + 1.0));
                wgt[j] = du;
            }
        } else {
            double dx = (b - a) / n;
            for (int j = 0; j < n; ++j) {
                x[j] = a + (j + 0.5) * dx;
                wgt[j] = std::pow(x[j], g) * dx;
            }
        }
    };
    std::vector<double> x1, w1, x2, w2;
    nodes(g1, a1, b1, x1, w1);
    nodes(g2, a2, b2, x2, w2);
    double acc = 0.0;
    for (int j1 = 0; j1 < n; ++j1) {
        double row = 0.0;
        for (int j2 = 0; j2 < n; ++j2) row += w2[j2] * G(x1[j1], x2[j2]);
        acc += w1[j1] * row;
    }
    return acc;
}

void finalize_report(CutoffReport& rep, double base) {
    rep.value = base;
    for (double inc : rep.increments) rep.value += inc;
    double lg = 0.0;
    int cnt = 0;
    bool ok = true;
    for (std::size_t m = 0; m + 1 < rep.increments.size(); ++m) {
        double r = rep.increments[m + 1] / std::max(rep.increments[m], 1e-300);
        if (!(r > 0.0) || !std::isfinite(r)) ok = false;
        lg += std::log(std::max(r, 1e-300));
        ++cnt;
    }
    rep.decay_ratio = cnt ? std::exp(lg / cnt) : 1.0;
    ok = ok && std::isfinite(rep.value);
    rep.stable = ok && rep.decay_ratio <= 0.9 &&
                 rep.increments.back() <= 0.5 * rep.increments.front();
}

} // namespace

CutoffReport check_TQ_integrability(const TestFunction& psi, int criterion, double e1, double e2,
                                    int i, int rings) {
    check_axis(psi, i, false);
    if (criterion < 1 || criterion > 3)
        throw std::invalid_argument("check_TQ_integrability: criterion must be 1, 2 or 3");
    const double g1 = 1.0 - e1, g2 = 1.0 - e2;
    CutoffReport rep;
    double base = 0.0;

    if (criterion == 1) {
        // cutoffs start past the central plateau of the squared modulus so
        // each doubling probes the decaying tail
        const double Rlast = 4.0 * std::pow(2.0, rings);
        QsqTable q = build_qsq(psi, i, 1.5 * Rlast, 129, 257);
        std::function<double(double, double)> Gp = [&](double x1, double x2) {
            return q.at(x1, x2);
        };
        std::function<double(double, double)> Gm = [&](double x1, double x2) {
            return q.at(x1, -x2);
        };
        double R = 4.0;
        rep.cutoffs.push_back(R);
        base = 2.0 * (rect2(Gp, g1, 0, R, g2, 0, R) + rect2(Gm, g1, 0, R, g2, 0, R));
        for (int m = 0; m < rings; ++m) {
            double R2 = 2.0 * R;
            double inc = 0.0;
            for (const auto& G : {Gp, Gm}) {
                inc += rect2(G, g1, R, R2, g2, 0, R);
                inc += rect2(G, g1, 0, R, g2, R, R2);
                inc += rect2(G, g1, R, R2, g2, R, R2);
            }
            rep.increments.push_back(2.0 * inc);
            R = R2;
            rep.cutoffs.push_back(R);
        }
    } else {
        const double Slast = (criterion == 2) ? std::pow(2.0, rings)
                                              : 4.0 * std::pow(2.0, rings);
        TsqTable tt = build_tsq(psi, i, false, (criterion == 2 ? 2.0 : 3.0) * Slast, 2049);
        std::function<double(double, double)> Gp = [&](double x1, double x2) {
            return tt.at(x1 + x2);
        };
        std::function<double(double, double)> Gm = [&](double x1, double x2) {
            return tt.at(x1 - x2);
        };
        if (criterion == 2) {
            double S = 1.0;
            rep.cutoffs.push_back(S);
            base = 2.0 * (rect2(Gp, g1, 0, 1, g2, 0, S) + rect2(Gm, g1, 0, 1, g2, 0, S));
            for (int m = 0; m < rings; ++m) {
                double S2 = 2.0 * S;
                double inc = rect2(Gp, g1, 0, 1, g2, S, S2) +
                             rect2(Gm, g1, 0, 1, g2, S, S2);
                rep.increments.push_back(2.0 * inc);
                S = S2;
                rep.cutoffs.push_back(S);
            }
        } else {
            double R = 2.0, S = 4.0;
            rep.cutoffs.push_back(R);
            base = 2.0 * (rect2(Gp, g1, 1, R, g2, 0, S) + rect2(Gm, g1, 1, R, g2, 0, S));
            for (int m = 0; m < rings; ++m) {
                double R2 = 2.0 * R, S2 = 2.0 * S;
                double inc = 0.0;
                for (auto& G : {Gp, Gm}) {
                    inc += rect2(G, g1, R, R2, g2, 0, S);
                    inc += rect2(G, g1, 1, R2, g2, S, S2);
                }
                rep.increments.push_back(2.0 * inc);
                R = R2;
                S = S2;
                rep.cutoffs.push_back(R);
            }
        }
    }
    finalize_report(rep, base);
    return rep;
}

CutoffReport check_psi_weight_integral(const TestFunction& psi, const HurstConfig& hc) {
    hc.validate();
    if (hc.d != psi.d)
        throw std::invalid_argument("check_psi_weight_integral: dimension mismatch");
    const int mcount = 9;
    std::vector<double> gammas;
    std::vector<const BumpFactor*> axes;
    if (!hc.spatial_only()) {
        gammas.push_back(1.0 - 2.0 * (*hc.h0));
        axes.push_back(&psi.factors[0]);
    }
    for (int i = 1; i <= psi.d; ++i) {
        gammas.push_back(1.0 - 2.0 * hc.h[i - 1]);
        axes.push_back(&psi.factors[i]);
    }
    // per-axis running totals A_j(R_m) over R = 1, 2, ..., 2^{mcount-1}
    std::vector<std::vector<double>> A(axes.size());
    for (std::size_t j = 0; j < axes.size(); ++j) {
        const BumpFactor* f = axes[j];
        auto mod = [f](double u) { return std::abs(f->fourier(u)); };
        double run = 2.0 * integrate_power_weighted(mod, gammas[j], 1.0, 1e-9).value;
        A[j].push_back(run);
        double R = 1.0;
        for (int m = 1; m < mcount; ++m) {
            auto wf = [&](double u) { return std::pow(u, gammas[j]) * mod(u); };
            run += 2.0 * adaptive_gk(wf, R, 2.0 * R, 1e-9, 1e-16, 4000).value;
            A[j].push_back(run);
            R *= 2.0;
        }
    }
    CutoffReport rep;
    std::vector<double> box(mcount, 1.0);
    double R = 1.0;
    for (int m = 0; m < mcount; ++m) {
        for (std::size_t j = 0; j < axes.size(); ++j) box[m] *= A[j][m];
        rep.cutoffs.push_back(R);
        R *= 2.0;
    }
    for (int m = 1; m < mcount; ++m) rep.increments.push_back(box[m] - box[m - 1]);
    finalize_report(rep, box[0]);
    return rep;
}

} // namespace krp
