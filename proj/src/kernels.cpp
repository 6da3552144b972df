#include "krp/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fftw3.h>

#include "krp/quad.hpp"

namespace krp {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

void check_dim(int d) {
    if (d < 1 || d > 3)
        throw std::invalid_argument("kernels: dimension must be between 1 and 3");
}

double sq_norm(const double* x, int d) {
    double q = 0.0;
    for (int i = 0; i < d; ++i) q += x[i] * x[i];
    return q;
}

// smooth step from 1 at t=0 to 0 at t=1
double step_exp(double t) {
    if (t <= 0.0) return 1.0;
    if (t >= 1.0) return 0.0;
    double a = std::exp(-1.0 / (1.0 - t));
    double b = std::exp(-1.0 / t);
    return a / (a + b);
}

double step_poly(double t) {
    if (t <= 0.0) return 1.0;
    if (t >= 1.0) return 0.0;
    double t4 = t * t * t * t;
    return 1.0 - t4 * (35.0 + t * (-84.0 + t * (70.0 - 20.0 * t)));
}

// Catmull-Rom weights for the fractional offset u in [0,1]
void cr_weights(double u, double w[4]) {
    double u2 = u * u, u3 = u2 * u;
    w[0] = 0.5 * (-u3 + 2.0 * u2 - u);
    w[1] = 0.5 * (3.0 * u3 - 5.0 * u2 + 2.0);
    w[2] = 0.5 * (-3.0 * u3 + 4.0 * u2 + u);
    w[3] = 0.5 * (u3 - u2);
}

} // namespace

double heat_kernel(double s, const double* x, int d) {
    check_dim(d);
    if (s <= 0.0) throw std::invalid_argument("heat_kernel: time must be positive");
    return std::pow(kTwoPi * s, -0.5 * d) * std::exp(-sq_norm(x, d) / (2.0 * s));
}

std::complex<double> heat_fourier(double lam, const double* xi, int d) {
    check_dim(d);
    double q = 0.5 * sq_norm(xi, d);
    if (q == 0.0 && lam == 0.0)
        throw std::invalid_argument("heat_fourier: transform is singular at the origin");
    return 1.0 / std::complex<double>(q, lam);
}

double LocalizedKernel::gauge(double s, const double* x) const {
    double q = s * s;
    for (int i = 0; i < d; ++i) q += x[i] * x[i] * x[i] * x[i];
    return std::pow(q, 0.25);
}

double LocalizedKernel::profile(double u) const {
    if (u <= 0.5) return 1.0;
    if (u >= 1.0) return 0.0;
    double t = 2.0 * u - 1.0;
    return kind == ProfileKind::smooth_exp ? step_exp(t) : step_poly(t);
}

double LocalizedKernel::annulus_bump(double s, const double* x) const {
    double g = gauge(s, x);
    return profile(g) - profile(2.0 * g);
}

double LocalizedKernel::k0(double s, const double* x) const {
    if (s <= 0.0) return 0.0;
    double b = annulus_bump(s, x);
    if (b == 0.0) return 0.0;
    return b * heat_kernel(s, x, d);
}

double LocalizedKernel::term(int l, double s, const double* x) const {
    double ts = std::ldexp(1.0, 2 * l);
    double xs = std::ldexp(1.0, l);
    double xt[3];
    for (int i = 0; i < d; ++i) xt[i] = xs * x[i];
    return std::pow(xs, d) * k0(ts * s, xt);
}

double LocalizedKernel::eval_K(double s, const double* x) const {
    if (s <= 0.0) return 0.0;
    double c = profile(gauge(s, x));
    if (c == 0.0) return 0.0;
    return c * heat_kernel(s, x, d);
}

double LocalizedKernel::eval_R(double s, const double* x) const {
    if (s <= 0.0) return 0.0;
    double c = 1.0 - profile(gauge(s, x));
    if (c == 0.0) return 0.0;
    return c * heat_kernel(s, x, d);
}

double LocalizedKernel::eval_K_series(double s, const double* x) const {
    double acc = 0.0;
    for (int l = 0; l <= l_max; ++l) acc += term(l, s, x);
    return acc;
}

double LocalizedKernel::eval_R_series(double s, const double* x) const {
    double acc = 0.0;
    for (int l = -l_max; l < 0; ++l) acc += term(l, s, x);
    return acc;
}

double LocalizedKernel::partition_residual(double s, const double* x) const {
    double acc = 0.0;
    for (int l = -l_max; l <= l_max; ++l) {
        double ts = std::ldexp(1.0, 2 * l);
        double xs = std::ldexp(1.0, l);
        double xt[3];
        for (int i = 0; i < d; ++i) xt[i] = xs * x[i];
        acc += annulus_bump(ts * s, xt);
    }
    return std::abs(acc - 1.0);
}

double LocalizedKernel::tilde_K(const double* x) const {
    if (sq_norm(x, d) == 0.0)
        throw std::invalid_argument("tilde_K: undefined at the spatial origin");
    auto f = [&](double s) { return eval_K(s, x); };
    // the integrand peaks near s ~ |x|^2; split there so the adaptive rule
    // cannot overlook a spike far below the interval scale
    double split = std::min(1.0, sq_norm(x, d));
    double head = adaptive_gk(f, 0.0, split, 1e-11, 1e-15).value;
    double rest = split < 1.0 ? adaptive_gk(f, split, 1.0, 1e-11, 1e-15).value : 0.0;
    return head + rest;
}

LocalizedKernel build_localized_kernel(int d, int l_max, ProfileKind kind) {
    check_dim(d);
    if (l_max < 4) throw std::invalid_argument("build_localized_kernel: l_max must be >= 4");
    LocalizedKernel ker;
    ker.d = d;
    ker.l_max = l_max;
    ker.kind = kind;
    return ker;
}

std::complex<double> Fk0Table::Grid::node(int j, int k) const {
    if (k < 0) k = -k;
    bool cj = false;
    if (j < 0) {
        j = -j;
        cj = true;
    }
    if (j > nl || k > nx) return 0.0;
    std::complex<double> val = v[std::size_t(j) * (nx + 1) + k];
    return cj ? std::conj(val) : val;
}

std::complex<double> Fk0Table::Grid::interp(double lam, double xi) const {
    double aj = lam / dfl, ak = xi / dfx;
    int j0 = int(aj), k0 = int(ak);
    double wj[4], wk[4];
    cr_weights(aj - j0, wj);
    cr_weights(ak - k0, wk);
    std::complex<double> acc = 0.0;
    for (int a = 0; a < 4; ++a) {
        std::complex<double> row = 0.0;
        for (int b = 0; b < 4; ++b) row += wk[b] * node(j0 + a - 1, k0 + b - 1);
        acc += wj[a] * row;
    }
    return acc;
}

std::complex<double> Fk0Table::at(double lam, double xi) const {
    bool cj = lam < 0.0;
    lam = std::abs(lam);
    xi = std::abs(xi);
    std::complex<double> acc;
    if (lam <= fine_.extl && xi <= fine_.extx) acc = fine_.interp(lam, xi);
    else if (lam <= coarse_.extl && xi <= coarse_.extx) acc = coarse_.interp(lam, xi);
    else return 0.0;
    return cj ? std::conj(acc) : acc;
}

namespace {

// sampled base function on a lattice with step hs in s and hx in x; s rows
// 0..rows-1, x wrapped into a length-cols periodic index
std::vector<double> sample_k0_rows(const LocalizedKernel& ker, double hs, double hx, int rows,
                                   int cols) {
    std::vector<double> f(std::size_t(rows) * cols, 0.0);
    int js = int(1.0 / hx) + 1;
    for (int j = 0; j < rows; ++j) {
        double s = j * hs;
        if (s > 1.0 + hs) break;
        for (int m = -js; m <= js; ++m) {
            double x = m * hx;
            double v = ker.k0(s, &x);
            if (v != 0.0) f[std::size_t(j) * cols + ((m + cols) % cols)] = v;
        }
    }
    return f;
}

} // namespace

Fk0Table build_fk0_table(const LocalizedKernel& ker) {
    if (ker.d != 1)
        throw std::invalid_argument("build_fk0_table: only the d = 1 table is supported");
    const double h = 1.0 / 128.0;
    Fk0Table tab;

    {
        // coarse grid: one padded 2-D transform on a box of length 16 in both
        // variables, sampled twice as densely in s as in x so the kept time
        // frequencies reach twice as far
        const int Ms = 4096, Mx = 2048;
        const double hs = 1.0 / 256.0, hx = 1.0 / 128.0;
        std::vector<double> in = sample_k0_rows(ker, hs, hx, Ms, Mx);
        std::vector<std::complex<double>> out(std::size_t(Ms) * (Mx / 2 + 1));
        fftw_plan plan = fftw_plan_dft_r2c_2d(Ms, Mx, in.data(),
                                              reinterpret_cast<fftw_complex*>(out.data()),
                                              FFTW_ESTIMATE);
        fftw_execute(plan);
        fftw_destroy_plan(plan);
        int hl = Ms / 2, hx2 = Mx / 2;
        tab.coarse_.nl = hl;
        tab.coarse_.nx = hx2;
        tab.coarse_.dfl = kTwoPi / (Ms * hs);
        tab.coarse_.dfx = kTwoPi / (Mx * hx);
        tab.coarse_.extl = (hl - 2) * tab.coarse_.dfl;
        tab.coarse_.extx = (hx2 - 2) * tab.coarse_.dfx;
        tab.coarse_.v.resize(std::size_t(hl + 1) * (hx2 + 1));
        for (int j = 0; j <= hl; ++j)
            for (int k = 0; k <= hx2; ++k)
                tab.coarse_.v[std::size_t(j) * (hx2 + 1) + k] =
                    hs * hx * out[std::size_t(j) * (hx2 + 1) + k];
        tab.mass_ = tab.coarse_.v[0].real();
        double bmax = 0.0;
        for (int j = 0; j <= hl; ++j)
            bmax = std::max(bmax, std::abs(tab.coarse_.v[std::size_t(j) * (hx2 + 1) + hx2]));
        for (int k = 0; k <= hx2; ++k)
            bmax = std::max(bmax, std::abs(tab.coarse_.v[std::size_t(hl) * (hx2 + 1) + k]));
        tab.boundary_ = bmax;
    }

    {
        // fine grid: same sampling rate, padded to box length 128 for an
        // eightfold finer frequency lattice, restricted to low frequencies;
        // the transform is separable in the exponentials, so pad and
        // transform one axis at a time instead of holding the full 2-D box
        const int Mpad = 16384;
        const int keep = 1025;
        const int rows = 130, cols = 259;
        std::vector<double> f = sample_k0_rows(ker, h, h, rows, cols);

        std::vector<double> rbuf(Mpad, 0.0);
        std::vector<std::complex<double>> rout(Mpad / 2 + 1);
        fftw_plan prow = fftw_plan_dft_r2c_1d(Mpad, rbuf.data(),
                                              reinterpret_cast<fftw_complex*>(rout.data()),
                                              FFTW_ESTIMATE);
        std::vector<std::complex<double>> stage(std::size_t(rows) * keep);
        for (int j = 0; j < rows; ++j) {
            std::fill(rbuf.begin(), rbuf.end(), 0.0);
            for (int m = 0; m < cols; ++m) {
                int idx = m <= cols / 2 ? m : Mpad - (cols - m);
                rbuf[idx] = f[std::size_t(j) * cols + m];
            }
            fftw_execute(prow);
            for (int k = 0; k < keep; ++k) stage[std::size_t(j) * keep + k] = rout[k];
        }
        fftw_destroy_plan(prow);

        std::vector<std::complex<double>> cbuf(Mpad), cout(Mpad);
        fftw_plan pcol = fftw_plan_dft_1d(Mpad, reinterpret_cast<fftw_complex*>(cbuf.data()),
                                          reinterpret_cast<fftw_complex*>(cout.data()),
                                          FFTW_FORWARD, FFTW_ESTIMATE);
        tab.fine_.nl = tab.fine_.nx = keep - 1;
        tab.fine_.dfl = tab.fine_.dfx = kTwoPi / (Mpad * h);
        tab.fine_.extl = tab.fine_.extx = (keep - 3) * tab.fine_.dfl;
        tab.fine_.v.resize(std::size_t(keep) * keep);
        for (int k = 0; k < keep; ++k) {
            std::fill(cbuf.begin(), cbuf.end(), std::complex<double>(0.0));
            for (int j = 0; j < rows; ++j) cbuf[j] = stage[std::size_t(j) * keep + k];
            fftw_execute(pcol);
            for (int j = 0; j < keep; ++j)
                tab.fine_.v[std::size_t(j) * keep + k] = h * h * cout[j];
        }
        fftw_destroy_plan(pcol);
    }
    return tab;
}

std::complex<double> fourier_K(const LocalizedKernel& ker, const Fk0Table& tab, double lam,
                               double xi) {
    std::complex<double> acc = 0.0;
    for (int l = 0; l <= ker.l_max; ++l)
        acc += std::ldexp(1.0, -2 * l) *
               tab.at(std::ldexp(lam, -2 * l), std::ldexp(xi, -l));
    return acc;
}

std::complex<double> fourier_R(const LocalizedKernel& ker, const Fk0Table& tab, double lam,
                               double xi) {
    std::complex<double> acc = 0.0;
    for (int m = 1; m <= ker.l_max; ++m) {
        double l2 = std::ldexp(lam, 2 * m);
        double x2 = std::ldexp(xi, m);
        if (std::abs(l2) > tab.time_extent() || std::abs(x2) > tab.space_extent()) break;
        acc += std::ldexp(1.0, 2 * m) * tab.at(l2, x2);
    }
    return acc;
}

double TildeKTransform::node(int j, int k) const {
    if (j < 0) j = -j;
    if (k < 0) k = -k;
    if (j > n_ || k > n_) return 0.0;
    return v_[std::size_t(j) * (n_ + 1) + k];
}

double TildeKTransform::base(double xi1, double xi2) const {
    xi1 = std::abs(xi1);
    xi2 = std::abs(xi2);
    if (xi1 > ext_ || xi2 > ext_) return 0.0;
    double aj = xi1 / dfreq_, ak = xi2 / dfreq_;
    int j0 = int(aj), k0 = int(ak);
    double wj[4], wk[4];
    cr_weights(aj - j0, wj);
    cr_weights(ak - k0, wk);
    double acc = 0.0;
    for (int a = 0; a < 4; ++a) {
        double row = 0.0;
        for (int b = 0; b < 4; ++b) row += wk[b] * node(j0 + a - 1, k0 + b - 1);
        acc += wj[a] * row;
    }
    return acc;
}

double TildeKTransform::at(double xi1, double xi2) const {
    double acc = 0.0;
    for (int l = 0; l <= l_max_; ++l)
        acc += std::ldexp(1.0, -2 * l) * base(std::ldexp(xi1, -l), std::ldexp(xi2, -l));
    return acc;
}

TildeKTransform build_tilde_k_transform(const LocalizedKernel& ker) {
    if (ker.d != 2)
        throw std::invalid_argument("build_tilde_k_transform: only d = 2 is supported");
    const int M = 1024;
    const double L = 16.0;
    const double h = L / M;

    // 32-point Gauss-Legendre nodes/weights on [0,1]
    static const double gl_x[16] = {
        0.0483076656877383162348126, 0.1444719615827964934851864, 0.2392873622521370745446032,
        0.3318686022821276497799168, 0.4213512761306353453641194, 0.5068999089322293900237475,
        0.5877157572407623290407455, 0.6630442669302152009751152, 0.7321821187402896803874267,
        0.7944837959679424069630973, 0.8493676137325699701336930, 0.8963211557660521239653072,
        0.9349060759377396891709191, 0.9647622555875064307738119, 0.9856115115452683354001750,
        0.9972638618494815635449811};
    static const double gl_w[16] = {
        0.0965400885147278005667648, 0.0956387200792748594190820, 0.0938443990808045656391802,
        0.0911738786957638847128686, 0.0876520930044038111427715, 0.0833119242269467552221991,
        0.0781938957870703064717409, 0.0723457941088485062253994, 0.0658222227763618468376501,
        0.0586840934785355471452836, 0.0509980592623761761961632, 0.0428358980222266806568786,
        0.0342738629130214331026877, 0.0253920653092620594557526, 0.0162743947309056706051706,
        0.0070186100094700966004071};
    auto time_integral = [&](const double* x) {
        // panels resolve the near-origin peak of the time profile
        static const double edges[4] = {0.0, 0.0625, 0.25, 1.0};
        double acc = 0.0;
        for (int p = 0; p < 3; ++p) {
            double c = 0.5 * (edges[p] + edges[p + 1]), r = 0.5 * (edges[p + 1] - edges[p]);
            for (int q = 0; q < 16; ++q) {
                acc += r * gl_w[q] *
                       (ker.k0(c + r * gl_x[q], x) + ker.k0(c - r * gl_x[q], x));
            }
        }
        return acc;
    };

    std::vector<double> in(std::size_t(M) * M, 0.0);
    int js = int(1.0 / h) + 1;
    for (int m1 = -js; m1 <= js; ++m1) {
        for (int m2 = -js; m2 <= js; ++m2) {
            double x[2] = {m1 * h, m2 * h};
            double v = time_integral(x);
            if (v != 0.0) in[std::size_t((m1 + M) % M) * M + ((m2 + M) % M)] = v;
        }
    }

    std::vector<std::complex<double>> out(std::size_t(M) * (M / 2 + 1));
    fftw_plan plan = fftw_plan_dft_r2c_2d(M, M, in.data(),
                                          reinterpret_cast<fftw_complex*>(out.data()),
                                          FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);

    TildeKTransform tk;
    int half = M / 2;
    tk.n_ = half;
    tk.l_max_ = ker.l_max;
    tk.dfreq_ = kTwoPi / L;
    tk.ext_ = (half - 2) * tk.dfreq_;
    tk.v_.resize(std::size_t(half + 1) * (half + 1));
    double scale = h * h;
    for (int j = 0; j <= half; ++j)
        for (int k = 0; k <= half; ++k)
            tk.v_[std::size_t(j) * (half + 1) + k] =
                scale * out[std::size_t(j) * (half + 1) + k].real();
    return tk;
}

} // namespace krp
