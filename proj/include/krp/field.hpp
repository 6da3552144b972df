#pragma once

#include <cstdint>
#include <vector>

#include "krp/kernels.hpp"
#include "krp/spectral.hpp"

namespace krp {

// Regular sampling grid: a periodic spatial box [0, nx*dx)^d crossed with a
// finite, non-periodic time window {t0 + it*dt, it < nt}. Spatial frequencies
// live on multiples of 2*pi/box(), so synthesized fields are exactly periodic.
struct Lattice {
    int d = 1;
    double dt = 1.0 / 64;
    double dx = 1.0 / 16;
    int nt = 1;
    int nx = 16;
    double t0 = 0.0;

    double box() const { return nx * dx; }
    double t_end() const { return t0 + (nt - 1) * dt; }
    std::size_t space_nodes() const;
    std::size_t nodes() const { return std::size_t(nt) * space_nodes(); }
    void validate() const;  // throws std::invalid_argument
};

// Synthesis tuning. Zero radii mean "use the mollifier's effective bandwidth
// at the requested level"; smaller explicit radii are rejected unless strict
// is turned off, which permits deliberately under-resolved truncation runs.
struct SynthesisOptions {
    double trunc_lam = 0.0;
    double trunc_xi = 0.0;
    bool strict = true;
};

// One sampled realization of the mollified noise, plus the cached kernel
// convolution on the same nodes once convolve_K / convolve_tildeK has run.
// Storage is time-major, then x1, then x2.
struct LatticeField {
    Lattice lat;
    HurstConfig hurst;
    Mollifier mol;
    int level = 1;
    std::uint64_t seed = 0;
    double trunc_lam = 0.0;
    double trunc_xi = 0.0;
    std::vector<double> samples;
    std::vector<double> conv;
    int conv_from = 0;  // first time index with full kernel history

    std::size_t index(int it, int ix, int iy = 0) const;
    double at(int it, int ix, int iy = 0) const { return samples[index(it, ix, iy)]; }
    double conv_at(int it, int ix, int iy = 0) const { return conv[index(it, ix, iy)]; }
    bool spatial_mode() const { return hurst.spatial_only(); }
};

// Stream split for replica loops: statistically independent child seeds from a
// master seed, stable across platforms and runs.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

// Harmonizable synthesis of the level-n mollified noise on the lattice. Modes
// sit on the grid-matched frequency lattice; each mode carries the signed
// mollifier transform, the cell integral of the spectral density (computed in
// closed form per axis, so the |omega|^{1-2H} singularities cost no accuracy),
// and an independent complex Gaussian keyed by the frequency index alone.
// Fields sampled at different levels from the same seed therefore share their
// low-frequency content, which makes level differences meaningful pathwise.
LatticeField sample_field(const HurstConfig& hc, const Mollifier& m, int n,
                          const Lattice& lat, std::uint64_t seed,
                          const SynthesisOptions& opts = {});

// Time-constant counterpart driven by the spatial spectral density (d >= 2).
LatticeField sample_field_spatial(const HurstConfig& hc, const Mollifier& m, int n,
                                  const Lattice& lat, std::uint64_t seed,
                                  const SynthesisOptions& opts = {});

// Covariance of the synthesized lattice field at a node lag, evaluated
// deterministically by summing the mode lattice. Agrees with exact_cov up to
// frequency truncation and box periodization; replica statistics should match
// it to Monte Carlo accuracy.
double lattice_cov(const HurstConfig& hc, const Mollifier& m, int n, const Lattice& lat,
                   double lag_t, const std::vector<double>& lag_y,
                   const SynthesisOptions& opts = {});

// Same mode sum for the coupled difference between levels n and m: the
// per-mode coefficient becomes the squared transform gap, the sampling
// analogue of the Cauchy estimates across mollification levels.
double lattice_cov_diff(const HurstConfig& hc, const Mollifier& m, int n, int mlev,
                        const Lattice& lat, double lag_t, const std::vector<double>& lag_y,
                        const SynthesisOptions& opts = {});

// Continuum covariance of the level-n noise at a space-time lag: quadrature of
// the spectral integral with the level hoisted out, so the integrand stays
// order-one scaled at every n.
double exact_cov(const HurstConfig& hc, const Mollifier& m, int n, double lag_t,
                 const std::vector<double>& lag_y, double rtol = 1e-8);

// Covariance of the kernel-smoothed field K * field at a lag (d = 1: the
// space-time kernel transform is tabulated for one spatial dimension).
double exact_cov_Kfield(const HurstConfig& hc, const Mollifier& m,
                        const LocalizedKernel& ker, const Fk0Table& tab, int n,
                        double lag_t, const std::vector<double>& lag_y,
                        double rtol = 1e-6);

// Continuum covariance of the coupled level difference: the squared signed
// transform gap replaces the squared transform.
double exact_cov_diff(const HurstConfig& hc, const Mollifier& m, int n, int mlev,
                      double lag_t, const std::vector<double>& lag_y, double rtol = 1e-8);

// Spatial-model versions (no time argument).
double exact_cov_spatial(const HurstConfig& hc, const Mollifier& m, int n,
                         const std::vector<double>& lag_y, double rtol = 1e-8);
double exact_cov_tildeK_field(const HurstConfig& hc, const Mollifier& m,
                              const LocalizedKernel& ker, const TildeKTransform& tk, int n,
                              const std::vector<double>& lag_y, double rtol = 1e-6);

// Finest dyadic kernel scale the lattice resolves: the largest l with
// 2^{-l} >= 2 dx and 4^{-l} >= 2 dt, capped at the kernel's own depth.
// Negative means even the coarsest scale is unresolved.
int resolved_kernel_levels(const Lattice& lat, int l_max);

// Space-time convolution K * field on the lattice: fast transforms across the
// periodic spatial directions, direct trapezoid summation over the kernel's
// time support. Only dyadic kernel scales the grid resolves are retained; the
// dropped tail has mass of order the squared space step. The result lands in
// field.conv and is complete from field.conv_from onward (time indices before
// that lack full kernel history and are left at zero).
void convolve_K(LatticeField& field, const LocalizedKernel& ker);

// Spatial twin: multiplication by the transform of the time-integrated kernel
// across the periodic box (d = 2).
void convolve_tildeK(LatticeField& field, const LocalizedKernel& ker,
                     const TildeKTransform& tk);

} // namespace krp
