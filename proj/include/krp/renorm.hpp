#pragma once

#include "krp/kernels.hpp"
#include "krp/spectral.hpp"

namespace krp {

// Scale-invariant frequency integral governing the growth rate of the
// renormalization sequence: the squared mollifier transform times the real
// part of the heat transform times the spectral weight, integrated over all
// frequencies. Computed in parabolic polar coordinates, where the radial and
// angular singularities separate; the spherical factor is a closed gamma
// product because both mollifier kinds are radial in space frequency.
// Requires the rough sub-critical regime; infrared divergent at the border
// and beyond (throws).
double rate_integral(const HurstConfig& hc, const Mollifier& mol, double rtol = 1e-8);

// Spatial-model analogue with the time-integrated heat weight 2/|xi|^2,
// evaluated through an exponential-parameter representation that splits the
// weight across axes. Requires H < d-1 (throws otherwise).
double rate_integral_spatial(const HurstConfig& hc, const Mollifier& mol, double rtol = 1e-8);

// Renormalization constant at mollification level n, including the noise
// normalization. Sub-critical: direct quadrature with the level-n mollifier,
// equal to 2^{2n(d+1-2H0-H)} c^2 J up to quadrature error. Border: the
// level-1 mollifier with the infrared cutoff |lam|+|xi|^2 >= 2^{-2n}.
// Young regime throws here; the sequence only stabilizes against the
// localized kernel, see renorm_constant_kernel.
double renorm_constant(const HurstConfig& hc, const Mollifier& mol, int n, double rtol = 1e-8);

// Same constant with the tabulated localized-kernel transform in place of
// the heat-kernel closed form (d = 1). One formula in all three regimes: the
// level-n mollifier with no infrared cutoff, which the bounded origin of the
// transform permits. Sub-critical constants grow at the same dyadic rate as
// renorm_constant, border constants pick up the same log slope through the
// widening ultraviolet window, and in the Young regime the sequence
// converges to young_limit_mean.
double renorm_constant_kernel(const HurstConfig& hc, const Mollifier& mol,
                              const LocalizedKernel& ker, const Fk0Table& tab, int n,
                              double rtol = 1e-8);

// Spatial-model constants. Sub-critical: level-n mollifier against 2/|xi|^2.
// Border (H = d-1): level-1 mollifier with the cutoff |xi| >= 2^{-n}.
double renorm_constant_spatial(const HurstConfig& hc, const Mollifier& mol, int n,
                               double rtol = 1e-8);

// Spatial constant with the tabulated transform of the time-integrated
// localized kernel in place of 2/|xi|^2 (d = 2, any regime, level-n
// mollifier with no cutoff).
double renorm_constant_spatial_kernel(const HurstConfig& hc, const Mollifier& mol,
                                      const TildeKTransform& tk, int n, double rtol = 1e-8);

// Slope of the border-regime sequence n -> c_n in closed form (gamma and
// beta functions times the noise normalization). Requires the border regime.
double border_slope_closed_form(const HurstConfig& hc);

// Limit of the kernel-based sequence in the Young regime: the normalized
// integral of Re F K against the spectral weight (d = 1).
double young_limit_mean(const HurstConfig& hc, const LocalizedKernel& ker,
                        const Fk0Table& tab, double rtol = 1e-8);

} // namespace krp
