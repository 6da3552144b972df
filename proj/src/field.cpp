#include "krp/field.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>

#include "krp/quad.hpp"

namespace krp {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::complex<double> cis(double t) { return {std::cos(t), std::sin(t)}; }

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

double to_unit(std::uint64_t x) { return double((x >> 11) + 1) * 0x1.0p-53; }

// Standard complex gaussian (E g conj(g) = 1, E g^2 = 0) keyed by the
// frequency index alone, so fields at different levels share their draws.
std::complex<double> mode_gaussian(std::uint64_t seed, long kt, long j1, long j2) {
    std::uint64_t h = splitmix64(seed ^ 0x243F6A8885A308D3ULL);
    h = splitmix64(h ^ std::uint64_t(kt + 2));
    h = splitmix64(h ^ std::uint64_t(j1 + (1L << 30)));
    h = splitmix64(h ^ std::uint64_t(j2 + (1L << 30)));
    double u1 = to_unit(splitmix64(h ^ 0x452821E638D01377ULL));
    double u2 = to_unit(splitmix64(h ^ 0x13198A2E03707344ULL));
    double r = std::sqrt(-std::log(u1));
    return {r * std::cos(2.0 * kPi * u2), r * std::sin(2.0 * kPi * u2)};
}

// Closed-form cell integrals of |omega|^{1-2H}; the singular axis costs no
// quadrature accuracy because the density is integrated exactly per cell.
std::vector<double> time_weights(int kt, double dlam, double h0) {
    const double e = 2.0 - 2.0 * h0;
    std::vector<double> w(kt);
    double prev = 0.0;
    for (int k = 0; k < kt; ++k) {
        double cur = std::pow(double(k + 1) * dlam, e) / e;
        w[k] = cur - prev;
        prev = cur;
    }
    return w;
}

std::vector<double> space_weights(int jx, double dxi, double h) {
    const double e = 2.0 - 2.0 * h;
    std::vector<double> w(2 * jx + 1);
    auto prim = [&](double v) { return std::pow(v, e) / e; };
    w[jx] = 2.0 * prim(0.5 * dxi);
    for (int j = 1; j <= jx; ++j) {
        double v = prim((j + 0.5) * dxi) - prim((j - 0.5) * dxi);
        w[jx + j] = v;
        w[jx - j] = v;
    }
    return w;
}

double required_bt(const Mollifier& m) {
    // gaussian transforms are spent by |u| = 6; the indicator time factor
    // decays like 1/u, so its radius buys the tail down to ~1e-3 relative
    return m.kind == Mollifier::Kind::gauss_gauss ? 6.0 : 256.0;
}

double required_bx(const Mollifier&) { return 6.0; }

int next_pow2(int v) {
    int p = 1;
    while (p < v) p *= 2;
    return p;
}

// Frequency lattice matched to the sampling grid: spatial spacing 2 pi / box
// (exact periodicity), time spacing 2 pi / (Mt dt) with Mt a padded power of
// two, so mode phases alias onto the grid exactly and the synthesized samples
// are pointwise values of one continuum trigonometric field.
struct ModeGrid {
    bool spatial = false;
    int Mt = 0;
    int kt = 0;  // positive time modes, offset nodes (k + 1/2) dlam
    int jx = 0;  // spatial modes per axis, nodes j dxi for |j| <= jx
    double dlam = 0.0;
    double dxi = 0.0;
    std::vector<double> wt;
    std::vector<std::vector<double>> wx;  // per spatial axis
    double trunc_lam = 0.0;
    double trunc_xi = 0.0;
};

ModeGrid make_grid(const HurstConfig& hc, const Mollifier& m, int n, const Lattice& lat,
                   const SynthesisOptions& opts) {
    hc.validate();
    lat.validate();
    if (lat.d != hc.d)
        throw std::invalid_argument("field synthesis: lattice and Hurst dimensions differ");
    if (n < 1) throw std::invalid_argument("field synthesis: level must be >= 1");
    if (hc.regime() == Regime::unsupported)
        throw std::invalid_argument("field synthesis: unsupported Hurst regime");

    ModeGrid g;
    g.spatial = hc.spatial_only();
    g.dxi = 2.0 * kPi / lat.box();

    const double want_xi = std::ldexp(required_bx(m), n);
    g.trunc_xi = opts.trunc_xi > 0.0 ? opts.trunc_xi : want_xi;
    if (opts.strict && g.trunc_xi < want_xi)
        throw std::invalid_argument(
            "field synthesis: spatial truncation radius below the mollifier bandwidth");
    g.jx = int(std::ceil(g.trunc_xi / g.dxi));
    for (double hi : hc.h) g.wx.push_back(space_weights(g.jx, g.dxi, hi));

    if (!g.spatial) {
        g.Mt = next_pow2(4 * lat.nt);
        g.dlam = 2.0 * kPi / (g.Mt * lat.dt);
        const double want_lam = std::ldexp(required_bt(m), 2 * n);
        g.trunc_lam = opts.trunc_lam > 0.0 ? opts.trunc_lam : want_lam;
        if (opts.strict && g.trunc_lam < want_lam)
            throw std::invalid_argument(
                "field synthesis: time truncation radius below the mollifier bandwidth");
        g.kt = int(std::ceil(g.trunc_lam / g.dlam));
        g.wt = time_weights(g.kt, g.dlam, *hc.h0);
    }
    return g;
}

// Signed per-axis transform factors of the level-n mollifier over the grid.
std::vector<double> time_factors(const Mollifier& m, int n, const ModeGrid& g) {
    std::vector<double> tf(g.kt);
    for (int k = 0; k < g.kt; ++k) {
        double u = std::ldexp((k + 0.5) * g.dlam, -2 * n);
        tf[k] = m.fourier(u, nullptr, 0).real();
    }
    return tf;
}

std::vector<double> space_factors(const Mollifier& m, int n, const ModeGrid& g) {
    std::vector<double> sf(2 * g.jx + 1);
    for (int j = -g.jx; j <= g.jx; ++j) {
        double u = std::ldexp(j * g.dxi, -n);
        sf[g.jx + j] = m.fourier(0.0, &u, 1).real();
    }
    return sf;
}

double c_total2(const HurstConfig& hc) {
    double c = normalization_constants(hc).c_total;
    return c * c;
}

int wrap(int j, int nx) { return ((j % nx) + nx) % nx; }

void run_backward_dft(std::vector<std::complex<double>>& buf, int rank, const int* dims) {
    fftw_plan plan = fftw_plan_dft(rank, dims, reinterpret_cast<fftw_complex*>(buf.data()),
                                   reinterpret_cast<fftw_complex*>(buf.data()), FFTW_BACKWARD,
                                   FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
}

} // namespace

std::size_t Lattice::space_nodes() const {
    std::size_t v = 1;
    for (int i = 0; i < d; ++i) v *= std::size_t(nx);
    return v;
}

void Lattice::validate() const {
    if (d < 1 || d > 2) throw std::invalid_argument("Lattice: d must be 1 or 2");
    if (!(dt > 0.0) || !(dx > 0.0)) throw std::invalid_argument("Lattice: steps must be positive");
    if (nt < 1) throw std::invalid_argument("Lattice: need at least one time node");
    if (nx < 2) throw std::invalid_argument("Lattice: need at least two space nodes per axis");
}

std::size_t LatticeField::index(int it, int ix, int iy) const {
    std::size_t v = std::size_t(it) * lat.nx + ix;
    if (lat.d == 2) v = v * lat.nx + iy;
    return v;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t h = splitmix64(master ^ 0xD1B54A32D192ED03ULL);
    return splitmix64(h ^ stream);
}

LatticeField sample_field(const HurstConfig& hc, const Mollifier& m, int n, const Lattice& lat,
                          std::uint64_t seed, const SynthesisOptions& opts) {
    if (hc.spatial_only())
        throw std::invalid_argument("sample_field: spatial config, use sample_field_spatial");
    ModeGrid g = make_grid(hc, m, n, lat, opts);
    const double c = std::sqrt(c_total2(hc));
    const std::vector<double> tf = time_factors(m, n, g);
    const std::vector<double> sf = space_factors(m, n, g);

    const int nx = lat.nx;
    const std::size_t spn = lat.space_nodes();
    std::vector<std::complex<double>> buf(std::size_t(g.Mt) * spn);
    const double sqrt2 = std::sqrt(2.0);

    for (int k = 0; k < g.kt; ++k) {
        const double lam = (k + 0.5) * g.dlam;
        const std::complex<double> ph = cis(lam * lat.t0);
        const std::size_t row = std::size_t(k % g.Mt) * spn;
        const double bt = c * tf[k] * std::sqrt(2.0 * g.wt[k]);
        for (int j1 = -g.jx; j1 <= g.jx; ++j1) {
            const double b1 = bt * sf[g.jx + j1] * std::sqrt(g.wx[0][g.jx + j1]);
            if (lat.d == 1) {
                std::complex<double> coef =
                    sqrt2 * b1 * mode_gaussian(seed, k, j1, 0) * ph;
                buf[row + wrap(j1, nx)] += coef;
            } else {
                for (int j2 = -g.jx; j2 <= g.jx; ++j2) {
                    const double b2 = b1 * sf[g.jx + j2] * std::sqrt(g.wx[1][g.jx + j2]);
                    std::complex<double> coef =
                        sqrt2 * b2 * mode_gaussian(seed, k, j1, j2) * ph;
                    buf[row + std::size_t(wrap(j1, nx)) * nx + wrap(j2, nx)] += coef;
                }
            }
        }
    }

    if (lat.d == 1) {
        int dims[2] = {g.Mt, nx};
        run_backward_dft(buf, 2, dims);
    } else {
        int dims[3] = {g.Mt, nx, nx};
        run_backward_dft(buf, 3, dims);
    }

    LatticeField f;
    f.lat = lat;
    f.hurst = hc;
    f.mol = m;
    f.level = n;
    f.seed = seed;
    f.trunc_lam = g.trunc_lam;
    f.trunc_xi = g.trunc_xi;
    f.samples.resize(lat.nodes());
    for (int it = 0; it < lat.nt; ++it) {
        // half-bin offset of the time nodes, common to every mode
        const std::complex<double> tw = cis(kPi * double(it) / g.Mt);
        const std::size_t src = std::size_t(it) * spn;
        for (std::size_t s = 0; s < spn; ++s) {
            const std::complex<double>& v = buf[src + s];
            f.samples[src + s] = v.real() * tw.real() - v.imag() * tw.imag();
        }
    }
    return f;
}

LatticeField sample_field_spatial(const HurstConfig& hc, const Mollifier& m, int n,
                                  const Lattice& lat, std::uint64_t seed,
                                  const SynthesisOptions& opts) {
    if (!hc.spatial_only())
        throw std::invalid_argument("sample_field_spatial: space-time config, use sample_field");
    if (hc.d != 2)
        throw std::invalid_argument("sample_field_spatial: supported for d = 2");
    ModeGrid g = make_grid(hc, m, n, lat, opts);
    const double c = std::sqrt(c_total2(hc));
    const std::vector<double> sf = space_factors(m, n, g);

    const int nx = lat.nx;
    const std::size_t spn = lat.space_nodes();
    std::vector<std::complex<double>> buf(spn);
    const double sqrt2 = std::sqrt(2.0);

    for (int j1 = 0; j1 <= g.jx; ++j1) {
        const double b1 = c * sf[g.jx + j1] * std::sqrt(g.wx[0][g.jx + j1]);
        const int j2lo = (j1 == 0) ? 0 : -g.jx;
        for (int j2 = j2lo; j2 <= g.jx; ++j2) {
            const double amp = b1 * sf[g.jx + j2] * std::sqrt(g.wx[1][g.jx + j2]);
            std::complex<double> gk = mode_gaussian(seed, -1, j1, j2);
            std::complex<double> coef;
            if (j1 == 0 && j2 == 0) {
                // self-conjugate mode: real coefficient, unit-variance draw
                coef = amp * sqrt2 * gk.real();
            } else {
                coef = sqrt2 * std::sqrt(2.0) * amp * gk;
            }
            buf[std::size_t(wrap(j1, nx)) * nx + wrap(j2, nx)] += coef;
        }
    }

    int dims[2] = {nx, nx};
    run_backward_dft(buf, 2, dims);

    LatticeField f;
    f.lat = lat;
    f.hurst = hc;
    f.mol = m;
    f.level = n;
    f.seed = seed;
    f.trunc_xi = g.trunc_xi;
    f.samples.resize(lat.nodes());
    for (int it = 0; it < lat.nt; ++it)
        for (std::size_t s = 0; s < spn; ++s) f.samples[std::size_t(it) * spn + s] = buf[s].real();
    return f;
}

double lattice_cov(const HurstConfig& hc, const Mollifier& m, int n, const Lattice& lat,
                   double lag_t, const std::vector<double>& lag_y,
                   const SynthesisOptions& opts) {
    ModeGrid g = make_grid(hc, m, n, lat, opts);
    if (int(lag_y.size()) != hc.d)
        throw std::invalid_argument("lattice_cov: lag dimension mismatch");
    const std::vector<double> sf = space_factors(m, n, g);
    double acc = 0.0;
    if (g.spatial) {
        for (int j1 = -g.jx; j1 <= g.jx; ++j1) {
            const double f1 = sf[g.jx + j1];
            const double w1 = g.wx[0][g.jx + j1];
            for (int j2 = -g.jx; j2 <= g.jx; ++j2) {
                const double f = f1 * sf[g.jx + j2];
                acc += w1 * g.wx[1][g.jx + j2] * f * f *
                       std::cos(j1 * g.dxi * lag_y[0] + j2 * g.dxi * lag_y[1]);
            }
        }
        return c_total2(hc) * acc;
    }
    const std::vector<double> tf = time_factors(m, n, g);
    for (int k = 0; k < g.kt; ++k) {
        const double pht = (k + 0.5) * g.dlam * lag_t;
        const double bt = g.wt[k] * tf[k] * tf[k];
        for (int j1 = -g.jx; j1 <= g.jx; ++j1) {
            const double f1 = sf[g.jx + j1];
            const double b1 = bt * g.wx[0][g.jx + j1] * f1 * f1;
            if (hc.d == 1) {
                acc += b1 * std::cos(pht + j1 * g.dxi * lag_y[0]);
            } else {
                for (int j2 = -g.jx; j2 <= g.jx; ++j2) {
                    const double f2 = sf[g.jx + j2];
                    acc += b1 * g.wx[1][g.jx + j2] * f2 * f2 *
                           std::cos(pht + j1 * g.dxi * lag_y[0] + j2 * g.dxi * lag_y[1]);
                }
            }
        }
    }
    return 2.0 * c_total2(hc) * acc;
}

double lattice_cov_diff(const HurstConfig& hc, const Mollifier& m, int n, int mlev,
                        const Lattice& lat, double lag_t, const std::vector<double>& lag_y,
                        const SynthesisOptions& opts) {
    if (hc.spatial_only() || hc.d != 1)
        throw std::invalid_argument("lattice_cov_diff: implemented for the d = 1 space-time model");
    if (mlev < 0 || n < mlev)
        throw std::invalid_argument("lattice_cov_diff: need n >= m >= 0");
    ModeGrid g = make_grid(hc, m, n, lat, opts);
    const std::vector<double> tfn = time_factors(m, n, g);
    const std::vector<double> sfn = space_factors(m, n, g);
    std::vector<double> tfm(g.kt, 0.0), sfm(2 * g.jx + 1, 0.0);
    if (mlev >= 1) {
        tfm = time_factors(m, mlev, g);
        sfm = space_factors(m, mlev, g);
        // the sampled level-m field carries no modes beyond its own bandwidth
        ModeGrid gm = make_grid(hc, m, mlev, lat, opts);
        for (int k = gm.kt; k < g.kt; ++k) tfm[k] = 0.0;
        for (int j = gm.jx + 1; j <= g.jx; ++j) sfm[g.jx + j] = sfm[g.jx - j] = 0.0;
    }
    double acc = 0.0;
    for (int k = 0; k < g.kt; ++k) {
        const double pht = (k + 0.5) * g.dlam * lag_t;
        for (int j1 = -g.jx; j1 <= g.jx; ++j1) {
            const double df = tfn[k] * sfn[g.jx + j1] - tfm[k] * sfm[g.jx + j1];
            acc += g.wt[k] * g.wx[0][g.jx + j1] * df * df *
                   std::cos(pht + j1 * g.dxi * lag_y[0]);
        }
    }
    return 2.0 * c_total2(hc) * acc;
}

namespace {

// Shared quadrature core for the continuum covariances. The level is hoisted
// out by lam -> 4^n lam, xi -> 2^n xi, which keeps the integrand order-one
// scaled; evenness per axis folds the phase into a product of cosines. The
// coefficient argument supplies the full squared amplitude at base scale.
double cov_quadrature(const HurstConfig& hc, int n, double lag_t,
                      const std::vector<double>& lag_y, double rtol,
                      const std::function<double(double, const double*)>& coef) {
    hc.validate();
    if (int(lag_y.size()) != hc.d)
        throw std::invalid_argument("exact_cov: lag dimension mismatch");
    if (n < 1) throw std::invalid_argument("exact_cov: level must be >= 1");
    const int d = hc.d;
    const bool spa = hc.spatial_only();
    double scale = 1.0;
    std::vector<AxisWeight> axes;
    if (!spa) {
        scale *= std::pow(2.0, 2.0 * n * (2.0 - 2.0 * *hc.h0));
        axes.push_back({1.0 - 2.0 * *hc.h0, HUGE_VAL, 1.0});
    }
    for (double hi : hc.h) {
        scale *= std::pow(2.0, n * (2.0 - 2.0 * hi));
        axes.push_back({1.0 - 2.0 * hi, HUGE_VAL, 1.0});
    }
    const double pht = spa ? 0.0 : std::ldexp(lag_t, 2 * n);
    std::vector<double> phx(d);
    for (int i = 0; i < d; ++i) phx[i] = std::ldexp(lag_y[i], n);

    auto f = [&](const double* u) {
        const double* eta = spa ? u : u + 1;
        double osc = spa ? 1.0 : std::cos(u[0] * pht);
        for (int i = 0; i < d; ++i) osc *= std::cos(eta[i] * phx[i]);
        return coef(spa ? 0.0 : u[0], eta) * osc;
    };
    QuadResult r = integrate_singular(f, axes, rtol);
    const double folds = std::pow(2.0, double(axes.size()));
    return c_total2(hc) * folds * scale * r.value;
}

} // namespace

double exact_cov(const HurstConfig& hc, const Mollifier& m, int n, double lag_t,
                 const std::vector<double>& lag_y, double rtol) {
    if (hc.spatial_only())
        throw std::invalid_argument("exact_cov: spatial config, use exact_cov_spatial");
    const int d = hc.d;
    return cov_quadrature(hc, n, lag_t, lag_y, rtol,
                          [&](double mu, const double* eta) { return m.abs2(mu, eta, d); });
}

double exact_cov_Kfield(const HurstConfig& hc, const Mollifier& m, const LocalizedKernel& ker,
                        const Fk0Table& tab, int n, double lag_t,
                        const std::vector<double>& lag_y, double rtol) {
    if (hc.spatial_only() || hc.d != 1)
        throw std::invalid_argument(
            "exact_cov_Kfield: the space-time kernel transform is tabulated for d = 1");
    auto coef = [&](double mu, const double* eta) {
        return m.abs2(mu, eta, 1) *
               std::norm(fourier_K(ker, tab, std::ldexp(mu, 2 * n), std::ldexp(eta[0], n)));
    };
    return cov_quadrature(hc, n, lag_t, lag_y, rtol, coef);
}

double exact_cov_diff(const HurstConfig& hc, const Mollifier& m, int n, int mlev, double lag_t,
                      const std::vector<double>& lag_y, double rtol) {
    if (hc.spatial_only())
        throw std::invalid_argument("exact_cov_diff: space-time config required");
    if (mlev < 0 || n < mlev)
        throw std::invalid_argument("exact_cov_diff: need n >= m >= 0");
    const int gap = n - mlev;
    const int d = hc.d;
    auto coef = [&, gap, d](double mu, const double* eta) {
        double fn = m.fourier(mu, eta, d).real();
        double fm = 0.0;
        if (mlev >= 1) {
            double es[2] = {std::ldexp(eta[0], gap), d == 2 ? std::ldexp(eta[1], gap) : 0.0};
            fm = m.fourier(std::ldexp(mu, 2 * gap), es, d).real();
        }
        double df = fn - fm;
        return df * df;
    };
    return cov_quadrature(hc, n, lag_t, lag_y, rtol, coef);
}

double exact_cov_spatial(const HurstConfig& hc, const Mollifier& m, int n,
                         const std::vector<double>& lag_y, double rtol) {
    if (!hc.spatial_only())
        throw std::invalid_argument("exact_cov_spatial: spatial config required");
    const int d = hc.d;
    return cov_quadrature(hc, n, 0.0, lag_y, rtol,
                          [&](double, const double* eta) { return m.abs2_spatial(eta, d); });
}

double exact_cov_tildeK_field(const HurstConfig& hc, const Mollifier& m,
                              const LocalizedKernel& ker, const TildeKTransform& tk, int n,
                              const std::vector<double>& lag_y, double rtol) {
    (void)ker;
    if (!hc.spatial_only() || hc.d != 2)
        throw std::invalid_argument("exact_cov_tildeK_field: spatial d = 2 required");
    auto coef = [&](double, const double* eta) {
        double v = tk.at(std::ldexp(eta[0], n), std::ldexp(eta[1], n));
        return m.abs2_spatial(eta, 2) * v * v;
    };
    return cov_quadrature(hc, n, 0.0, lag_y, rtol, coef);
}

int resolved_kernel_levels(const Lattice& lat, int l_max) {
    int lx = int(std::floor(std::log2(1.0 / (2.0 * lat.dx)) + 1e-9));
    int lt = int(std::floor(0.5 * std::log2(1.0 / (2.0 * lat.dt)) + 1e-9));
    return std::min({lx, lt, l_max});
}

void convolve_K(LatticeField& f, const LocalizedKernel& ker) {
    if (f.spatial_mode())
        throw std::invalid_argument("convolve_K: space-time field required, use convolve_tildeK");
    const Lattice& lat = f.lat;
    if (ker.d != lat.d) throw std::invalid_argument("convolve_K: kernel dimension mismatch");
    if (lat.box() < 2.0)
        throw std::invalid_argument("convolve_K: periodic box narrower than the kernel support");
    const int lres = resolved_kernel_levels(lat, ker.l_max);
    if (lres < 0)
        throw std::invalid_argument(
            "convolve_K: lattice too coarse to resolve any dyadic kernel scale");
    const int J = int(std::ceil(1.0 / lat.dt - 1e-9));
    if (lat.nt <= J)
        throw std::invalid_argument(
            "convolve_K: time window shorter than the kernel support, no node sees full history");

    const int nx = lat.nx;
    const std::size_t spn = lat.space_nodes();
    const std::size_t nc = lat.d == 1 ? std::size_t(nx / 2 + 1)
                                      : std::size_t(nx) * (nx / 2 + 1);

    std::vector<double> rbuf(spn);
    std::vector<std::complex<double>> cbuf(nc);
    fftw_plan fwd, bwd;
    if (lat.d == 1) {
        fwd = fftw_plan_dft_r2c_1d(nx, rbuf.data(),
                                   reinterpret_cast<fftw_complex*>(cbuf.data()), FFTW_ESTIMATE);
        bwd = fftw_plan_dft_c2r_1d(nx, reinterpret_cast<fftw_complex*>(cbuf.data()),
                                   rbuf.data(), FFTW_ESTIMATE);
    } else {
        fwd = fftw_plan_dft_r2c_2d(nx, nx, rbuf.data(),
                                   reinterpret_cast<fftw_complex*>(cbuf.data()), FFTW_ESTIMATE);
        bwd = fftw_plan_dft_c2r_2d(nx, nx, reinterpret_cast<fftw_complex*>(cbuf.data()),
                                   rbuf.data(), FFTW_ESTIMATE);
    }

    // transforms of the grid-resolved kernel time slices; slice 0 vanishes by
    // causality and slice J by the compact support, so the trapezoid rule over
    // the kernel's time extent reduces to interior nodes with weight dt
    std::vector<std::complex<double>> shat(std::size_t(J) * nc);
    std::vector<double> z(std::max(lat.d, 1));
    for (int j = 1; j < J; ++j) {
        const double s = j * lat.dt;
        int lhi = std::min(lres, int(std::floor(0.5 * std::log2(1.0 / s) + 1e-9)));
        for (int m1 = 0; m1 < nx; ++m1) {
            z[0] = (m1 <= nx / 2 ? m1 : m1 - nx) * lat.dx;
            if (lat.d == 1) {
                double v = 0.0;
                for (int l = 0; l <= lhi; ++l) v += ker.term(l, s, z.data());
                rbuf[m1] = v;
            } else {
                for (int m2 = 0; m2 < nx; ++m2) {
                    z[1] = (m2 <= nx / 2 ? m2 : m2 - nx) * lat.dx;
                    double v = 0.0;
                    for (int l = 0; l <= lhi; ++l) v += ker.term(l, s, z.data());
                    rbuf[std::size_t(m1) * nx + m2] = v;
                }
            }
        }
        fftw_execute(fwd);
        std::copy(cbuf.begin(), cbuf.end(), shat.begin() + std::size_t(j) * nc);
    }

    std::vector<std::complex<double>> fhat(std::size_t(lat.nt) * nc);
    for (int it = 0; it < lat.nt; ++it) {
        std::copy(f.samples.begin() + std::size_t(it) * spn,
                  f.samples.begin() + std::size_t(it + 1) * spn, rbuf.begin());
        fftw_execute(fwd);
        std::copy(cbuf.begin(), cbuf.end(), fhat.begin() + std::size_t(it) * nc);
    }

    f.conv.assign(lat.nodes(), 0.0);
    f.conv_from = J;
    double vol = lat.dt * std::pow(lat.dx, lat.d) / double(spn);
    for (int it = J; it < lat.nt; ++it) {
        std::fill(cbuf.begin(), cbuf.end(), std::complex<double>(0.0, 0.0));
        for (int j = 1; j < J; ++j) {
            const std::complex<double>* a = shat.data() + std::size_t(j) * nc;
            const std::complex<double>* b = fhat.data() + std::size_t(it - j) * nc;
            for (std::size_t q = 0; q < nc; ++q) cbuf[q] += a[q] * b[q];
        }
        fftw_execute(bwd);
        for (std::size_t s = 0; s < spn; ++s) f.conv[std::size_t(it) * spn + s] = rbuf[s] * vol;
    }
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
}

void convolve_tildeK(LatticeField& f, const LocalizedKernel& ker, const TildeKTransform& tk) {
    const Lattice& lat = f.lat;
    if (lat.d != 2 || ker.d != 2)
        throw std::invalid_argument("convolve_tildeK: d = 2 required");
    const int nx = lat.nx;
    const std::size_t spn = lat.space_nodes();
    const std::size_t nc = std::size_t(nx) * (nx / 2 + 1);
    const double dxi = 2.0 * kPi / lat.box();

    std::vector<double> rbuf(spn);
    std::vector<std::complex<double>> cbuf(nc);
    fftw_plan fwd = fftw_plan_dft_r2c_2d(nx, nx, rbuf.data(),
                                         reinterpret_cast<fftw_complex*>(cbuf.data()),
                                         FFTW_ESTIMATE);
    fftw_plan bwd = fftw_plan_dft_c2r_2d(nx, nx, reinterpret_cast<fftw_complex*>(cbuf.data()),
                                         rbuf.data(), FFTW_ESTIMATE);

    f.conv.assign(lat.nodes(), 0.0);
    f.conv_from = 0;
    for (int it = 0; it < lat.nt; ++it) {
        bool repeat = it > 0 && f.spatial_mode();
        if (repeat) {
            // time-constant field: reuse the first slice
            std::copy(f.conv.begin(), f.conv.begin() + spn,
                      f.conv.begin() + std::size_t(it) * spn);
            continue;
        }
        std::copy(f.samples.begin() + std::size_t(it) * spn,
                  f.samples.begin() + std::size_t(it + 1) * spn, rbuf.begin());
        fftw_execute(fwd);
        for (int m1 = 0; m1 < nx; ++m1) {
            double xi1 = (m1 <= nx / 2 ? m1 : m1 - nx) * dxi;
            for (int m2 = 0; m2 <= nx / 2; ++m2) {
                cbuf[std::size_t(m1) * (nx / 2 + 1) + m2] *= tk.at(xi1, m2 * dxi);
            }
        }
        fftw_execute(bwd);
        for (std::size_t s = 0; s < spn; ++s)
            f.conv[std::size_t(it) * spn + s] = rbuf[s] / double(spn);
    }
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
}

} // namespace krp
