#pragma once

#include <cstdint>
#include <vector>

#include "krp/field.hpp"
#include "krp/kernels.hpp"
#include "krp/spectral.hpp"
#include "krp/testfn.hpp"

namespace krp {

// Polynomial growth weight x -> (1 + |x|)^kappa used by the dyadic norm
// estimators; bounded displacements move it by bounded ratios.
struct Weight {
    double kappa = 0.0;
    double operator()(const std::vector<double>& x) const;
};

// First-level pairing <field, S^{2^-ell}_{s,x} psi> by trapezoidal lattice
// quadrature over the scaled support. Throws when the support leaves the
// lattice domain or the lattice offers fewer than four nodes per support
// axis; the spatial box is treated as non-wrapping for supports.
double pair_first(const LatticeField& field, const TestFunction& psi, int ell, double s,
                  const std::vector<double>& x);

// Spatial-model pairing against 2^{ell d} psi_spa(2^ell (y - x)), where
// psi_spa is the product of the spatial factors of psi.
double pair_first_spatial(const LatticeField& field, const TestFunction& psi, int ell,
                          const std::vector<double>& x);

// Exact variance of the first-level pairing: the scale is hoisted out of the
// spectral integral, leaving the factor 2^{2 ell (d+2-(2H0+H))} times a
// quadrature whose mollifier argument carries 2^{-(n-ell)}. Independent of
// the base point by stationarity.
double exact_var_first(const HurstConfig& hc, const Mollifier& m, int n,
                       const TestFunction& psi, int ell, double rtol = 1e-6);

// Same integral with the squared transform gap between levels n and mlev in
// place of the squared transform; mlev = 0 means comparison against the zero
// field, so the plain variance comes back.
double exact_var_first_diff(const HurstConfig& hc, const Mollifier& m, int n, int mlev,
                            const TestFunction& psi, int ell, double rtol = 1e-6);

// Spatial versions with exponent 2 ell (d - H) and the spatial transforms.
double exact_var_first_spatial(const HurstConfig& hc, const Mollifier& m, int n,
                               const TestFunction& psi, int ell, double rtol = 1e-6);
double exact_var_first_spatial_diff(const HurstConfig& hc, const Mollifier& m, int n,
                                    int mlev, const TestFunction& psi, int ell,
                                    double rtol = 1e-6);

// Renormalized second-level pairing with base point (sb, xb) and the test
// function centered at (sc, xc): lattice quadrature of
//   [(conv(z) - conv(sb, xb)) field(z) - c_n] S^{2^-ell}_{sc,xc} psi (z).
// Needs convolve_K cached and the base point on a lattice node with full
// kernel history. Differences over base points at a fixed center cancel both
// c_n and the pointwise product, which is the discrete Chen identity.
double pair_second_at(const LatticeField& field, double c_n, const TestFunction& psi,
                      int ell, double sb, const std::vector<double>& xb, double sc,
                      const std::vector<double>& xc);

// Common case: test function centered at the base point.
double pair_second_renormalized(const LatticeField& field, double c_n,
                                const TestFunction& psi, int ell, double s,
                                const std::vector<double>& x);

// Spatial twins using the time-integrated kernel convolution cache.
double pair_second_spatial_at(const LatticeField& field, double c_n, const TestFunction& psi,
                              int ell, const std::vector<double>& xb,
                              const std::vector<double>& xc);
double pair_second_spatial(const LatticeField& field, double c_n, const TestFunction& psi,
                           int ell, const std::vector<double>& x);

// Mean of the renormalized second-level pairing: the kernel-smoothing mean
// minus c_n carries the constant part, and the base-point cross term enters
// through its Fourier representation against the scaled test transform.
// l_cap >= 0 truncates the kernel's dyadic series at that scale, matching a
// lattice convolution that resolves only scales up to l_cap; l_cap < 0 uses
// the full kernel.
double mean_error_term(const HurstConfig& hc, const Mollifier& m, const LocalizedKernel& ker,
                       const Fk0Table& tab, int n, double c_n, const TestFunction& psi,
                       int ell, double rtol = 1e-6, int l_cap = -1);
double mean_error_term_spatial(const HurstConfig& hc, const Mollifier& m,
                               const TildeKTransform& tk, int n, double c_n,
                               const TestFunction& psi, int ell, double rtol = 1e-6);

// Mean E[(K * field) field] with the kernel resolved up to dyadic scale
// l_cap, by direct quadrature of the truncated transform series. This is the
// continuum constant a lattice convolution with that resolution targets.
double kernel_mean_resolved(const HurstConfig& hc, const Mollifier& m, const Fk0Table& tab,
                            int n, int l_cap, double rtol = 1e-8);

// Exact second moment of the renormalized second-level pairing, split into
// the squared mean part and the two quartic Fourier integrals; u collects
// the modulus-squared coupling, v the mixed one. Both are evaluated by
// nested singular quadrature in 2(d+1) variables after hoisting the scale
// (supported space-time evaluation: d = 1; the spatial model covers d = 2).
struct SecondMoment {
    double mean = 0.0;
    double u = 0.0;
    double v = 0.0;
    double variance() const { return u + v; }
    double total() const { return mean * mean + u + v; }
};
SecondMoment exact_var_second(const HurstConfig& hc, const Mollifier& m,
                              const LocalizedKernel& ker, const Fk0Table& tab, int n,
                              double c_n, const TestFunction& psi, int ell,
                              double rtol = 2e-3, int l_cap = -1);
SecondMoment exact_var_second_spatial(const HurstConfig& hc, const Mollifier& m,
                                      const TildeKTransform& tk, int n, double c_n,
                                      const TestFunction& psi, int ell, double rtol = 2e-3);

// Pairings of one realization over test functions, dyadic scales, and base
// points, in study coordinates (time relative to the window center, space
// relative to the box center).
struct ScalePairings {
    int ell = 0;
    std::vector<LatticePoint> base;
    std::vector<std::vector<double>> first;   // [psi][base]
    std::vector<std::vector<double>> second;  // [psi][base]
};
struct KRoughPathSample {
    int level = 0;
    double c_n = 0.0;
    std::size_t npsi = 0;
    std::vector<ScalePairings> scales;
};

// Evaluates both pairing levels for every admissible base point of the
// dyadic lattices at depth min(ell, base_depth) inside the window of time
// radius T centered at s0. Base points whose scaled support would touch the
// lattice boundary are dropped, not wrapped.
KRoughPathSample build_krough_sample(const LatticeField& field, double c_n,
                                     const std::vector<TestFunction>& psis, int ell_min,
                                     int ell_max, int base_depth, double s0, double T);

// Dyadic Besov estimate over a sample: sup of 2^{ell alpha} |first| / w(x)
// at level 1 and 2^{ell (2 alpha + 2)} |second| / w(x)^2 at level 2,
// restricted to base points with |t| <= T. Works on difference samples too.
double besov_norm_estimate(const KRoughPathSample& sample, int level, double alpha,
                           const Weight& w, double T);

// Coupled-level Cauchy study. Fields at all requested levels share every
// frequency draw, so pathwise differences are meaningful; second-level
// differences carry c_n - c_m through the per-level constants. Norm
// estimates aggregate into the truncated weighted distance
// sum_k 2^{-k} q_k / (1 + q_k) with q_k the estimate over |x| <= k.
struct CauchyConfig {
    std::vector<int> levels;  // ascending; every earlier level is compared to the last
    int ell_min = 0;
    int ell_max = 3;
    int base_depth = 2;
    double alpha = -1.35;  // just below the noise regularity 2H0+H-(d+2)
    double kappa = 0.3;
    double T = 0.25;
    int k_max = 1;
    int replicas = 4;
    std::uint64_t seed = 1;
    Lattice lat;
};
struct CauchyRow {
    int n = 0;
    int mlev = 0;
    double first_norm = 0.0;
    double second_norm = 0.0;
    double distance = 0.0;
    std::vector<double> msq_first;   // per-scale replica mean square of first-level gaps
    std::vector<double> msq_second;  // same for the renormalized second level
};
std::vector<CauchyRow> cauchy_study(const HurstConfig& hc, const Mollifier& m,
                                    const LocalizedKernel& ker, const CauchyConfig& cfg);

} // namespace krp
