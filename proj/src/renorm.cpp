#include "krp/renorm.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "krp/quad.hpp"

namespace krp {

namespace {

constexpr double kHalfPi = 1.5707963267948966;

double norm2(const HurstConfig& hc) {
    NormalizationConstants nc = normalization_constants(hc);
    return nc.c_total * nc.c_total;
}

// integral of prod |omega_i|^{1-2H_i} over the unit sphere (two points for
// d = 1), as a closed gamma product
double sphere_weight(const HurstConfig& hc) {
    double lg = 0.0;
    for (double hi : hc.h) lg += std::lgamma(1.0 - hi);
    return 2.0 * std::exp(lg - std::lgamma(hc.d - hc.hsum()));
}

void require_space_time(const HurstConfig& hc, const char* who) {
    if (hc.spatial_only())
        throw std::invalid_argument(std::string(who) + ": space-time configuration required");
}

void require_spatial(const HurstConfig& hc, const char* who) {
    if (!hc.spatial_only())
        throw std::invalid_argument(std::string(who) + ": spatial configuration required");
}

void require_level(int n, const char* who) {
    if (n < 0) throw std::invalid_argument(std::string(who) + ": level must be >= 0");
}

// Parabolic polar coordinates lam = R sin(phi), |xi|^2 = 2 R cos(phi) turn
// the heat transform into Re F p = cos(phi)/R and separate the radial and
// angular singular powers: the R axis carries d - 2H0 - H, the phi axis
// 1 - 2H0. Both mollifier kinds are radial in space frequency, so the
// spherical directions integrate to the closed sphere_weight factor.
double polar_subcritical(const HurstConfig& hc, const Mollifier& mol, int n, double rtol) {
    const double h0 = *hc.h0, H = hc.hsum();
    const double gr = hc.d - 2.0 * h0 - H;
    const double gphi = 1.0 - 2.0 * h0;
    auto f = [&](const double* p) {
        double R = p[0], phi = p[1];
        double sp = std::sin(phi), cp = std::cos(phi);
        double t = mol.time_factor_abs(std::ldexp(R * sp, -2 * n));
        return std::pow(sp / phi, gphi) * std::pow(cp, hc.d - H) * t * t *
               std::exp(-std::ldexp(2.0 * R * cp, -2 * n));
    };
    std::vector<AxisWeight> axes{{gr, HUGE_VAL, 1.0}, {gphi, kHalfPi, 1.0}};
    QuadResult q = integrate_singular(f, axes, rtol);
    return 2.0 * std::pow(2.0, hc.d - H - 1.0) * sphere_weight(hc) * q.value;
}

// Border version: the radial power is exactly -1 and the level enters through
// the infrared cutoff |lam| + |xi|^2 >= 2^{-2n}, i.e. R >= Rmin(phi).
double polar_border(const HurstConfig& hc, const Mollifier& mol, int n, double rtol) {
    const double h0 = *hc.h0, H = hc.hsum();
    const double gphi = 1.0 - 2.0 * h0;
    auto fphi = [&](double phi) {
        double sp = std::sin(phi), cp = std::cos(phi);
        double rmin = std::ldexp(1.0, -2 * n) / (sp + 2.0 * cp);
        auto fr = [&](double R) {
            double t = mol.time_factor_abs(R * sp);
            return t * t * std::exp(-2.0 * R * cp);
        };
        QuadResult inner = integrate_tail_shells(fr, -1.0, rmin, rtol * 0.3);
        return std::pow(sp / phi, gphi) * std::pow(cp, hc.d - H) * inner.value;
    };
    QuadResult q = integrate_power_weighted(fphi, gphi, kHalfPi, rtol);
    return 2.0 * std::pow(2.0, hc.d - H - 1.0) * sphere_weight(hc) * q.value;
}

} // namespace

double rate_integral(const HurstConfig& hc, const Mollifier& mol, double rtol) {
    require_space_time(hc, "rate_integral");
    if (hc.regime() != Regime::rough_subcritical)
        throw std::invalid_argument(
            "rate_integral: infrared convergence needs the rough sub-critical regime");
    return polar_subcritical(hc, mol, 0, rtol);
}

double rate_integral_spatial(const HurstConfig& hc, const Mollifier& mol, double rtol) {
    require_spatial(hc, "rate_integral_spatial");
    if (hc.regime() != Regime::rough_subcritical)
        throw std::invalid_argument("rate_integral_spatial: requires H < d - 1");
    (void)mol;  // both kinds share the gaussian space factors
    // 2/|xi|^2 = 2 int_0^inf exp(-t |xi|^2) dt splits the radial weight
    // across axes. Rescaling each axis by sqrt(1+t) pulls the t dependence
    // out as (1+t)^{H-d}; integrating the spike at its own scale matters,
    // at large t the unscaled gaussian is narrower than any fixed rule.
    // What remains per axis is a power-weighted gaussian moment, computed
    // once, and an elementary t tail.
    const double dmh = hc.d - hc.hsum();
    double prod = 2.0;
    for (double hi : hc.h) {
        auto fy = [](double y) { return std::exp(-y * y); };
        prod *= 2.0 * integrate_weighted_halfline(fy, 1.0 - 2.0 * hi, 1.0, rtol * 0.3).value;
    }
    // int_0^inf (1+t)^{H-d} dt = 1/(d - H - 1), finite precisely when H < d - 1
    return prod / (dmh - 1.0);
}

double renorm_constant(const HurstConfig& hc, const Mollifier& mol, int n, double rtol) {
    require_space_time(hc, "renorm_constant");
    require_level(n, "renorm_constant");
    switch (hc.regime()) {
        case Regime::rough_subcritical:
            return norm2(hc) * polar_subcritical(hc, mol, n, rtol);
        case Regime::rough_border:
            return norm2(hc) * polar_border(hc, mol, n, rtol);
        case Regime::young:
            throw std::invalid_argument(
                "renorm_constant: the young-regime sequence stabilizes only against the "
                "localized kernel, use renorm_constant_kernel");
        default:
            throw std::invalid_argument("renorm_constant: unsupported regime");
    }
}

double renorm_constant_kernel(const HurstConfig& hc, const Mollifier& mol,
                              const LocalizedKernel& ker, const Fk0Table& tab, int n,
                              double rtol) {
    require_space_time(hc, "renorm_constant_kernel");
    require_level(n, "renorm_constant_kernel");
    if (hc.d != 1 || ker.d != 1)
        throw std::invalid_argument("renorm_constant_kernel: the transform table is d = 1");
    if (hc.regime() == Regime::unsupported)
        throw std::invalid_argument("renorm_constant_kernel: unsupported regime");
    const double h0 = *hc.h0, H = hc.hsum();
    const double glam = 1.0 - 2.0 * h0, gxi = 1.0 - 2.0 * H;

    // One formula for every regime: the level-n mollifier with no cutoff.
    // The kernel transform is bounded near the origin, so no infrared cutoff
    // is needed; the log divergence at the border regime enters through the
    // widening ultraviolet window of the mollifier instead.
    auto f = [&](const double* p) {
        double lam = p[0], xi = p[1];
        double t = mol.time_factor_abs(std::ldexp(lam, -2 * n));
        double xs = std::ldexp(xi, -n);
        return t * t * std::exp(-xs * xs) * fourier_K(ker, tab, lam, xi).real();
    };
    std::vector<AxisWeight> axes{{glam, HUGE_VAL, 1.0}, {gxi, HUGE_VAL, 1.0}};
    QuadResult q = integrate_singular(f, axes, rtol);
    return 4.0 * norm2(hc) * q.value;
}

double renorm_constant_spatial(const HurstConfig& hc, const Mollifier& mol, int n,
                               double rtol) {
    require_spatial(hc, "renorm_constant_spatial");
    require_level(n, "renorm_constant_spatial");
    (void)mol;
    const double H = hc.hsum();
    const double gr = 2.0 * hc.d - 3.0 - 2.0 * H;
    switch (hc.regime()) {
        case Regime::rough_subcritical: {
            auto fr = [&](double rho) { return std::exp(-std::ldexp(rho * rho, -2 * n)); };
            QuadResult q = integrate_weighted_halfline(fr, gr, 1.0, rtol);
            return norm2(hc) * sphere_weight(hc) * 2.0 * q.value;
        }
        case Regime::rough_border: {
            auto fr = [&](double rho) { return std::exp(-rho * rho); };
            QuadResult q = integrate_tail_shells(fr, -1.0, std::ldexp(1.0, -n), rtol);
            return norm2(hc) * sphere_weight(hc) * 2.0 * q.value;
        }
        case Regime::young:
            throw std::invalid_argument(
                "renorm_constant_spatial: the young-regime sequence stabilizes only against "
                "the localized kernel, use renorm_constant_spatial_kernel");
        default:
            throw std::invalid_argument("renorm_constant_spatial: unsupported regime");
    }
}

double renorm_constant_spatial_kernel(const HurstConfig& hc, const Mollifier& mol,
                                      const TildeKTransform& tk, int n, double rtol) {
    require_spatial(hc, "renorm_constant_spatial_kernel");
    require_level(n, "renorm_constant_spatial_kernel");
    if (hc.d != 2)
        throw std::invalid_argument("renorm_constant_spatial_kernel: the transform is d = 2");
    if (hc.regime() == Regime::unsupported)
        throw std::invalid_argument("renorm_constant_spatial_kernel: unsupported regime");
    (void)mol;
    const double gr = 2.0 * hc.d - 1.0 - 2.0 * hc.hsum();

    // One formula for every regime, the level-n mollifier with no cutoff, in
    // quadrant polar coordinates. The table transform is bounded at 0 and
    // behaves like 2/|xi|^2 in the far field, so the radial weight stays
    // above -1 and the mollifier terminates the shells; at the border the
    // shells between 1 and 2^n each carry about the same log-slope mass.
    // The angular integral is split at pi/4 so each piece has its singular
    // power at 0.
    double total = 0.0;
    for (int half = 0; half < 2; ++half) {
        double hnear = hc.h[half == 0 ? 1 : 0];
        double hfar = hc.h[half == 0 ? 0 : 1];
        double gpsi = 1.0 - 2.0 * hnear;
        auto fpsi = [&](double psi) {
            double sp = std::sin(psi), cp = std::cos(psi);
            double c1 = half == 0 ? cp : sp;
            double c2 = half == 0 ? sp : cp;
            auto fr = [&](double rho) {
                return std::exp(-std::ldexp(rho * rho, -2 * n)) * tk.at(rho * c1, rho * c2);
            };
            QuadResult inner = integrate_weighted_halfline(fr, gr, 1.0, rtol * 0.3);
            return std::pow(sp / psi, gpsi) * std::pow(cp, 1.0 - 2.0 * hfar) * inner.value;
        };
        total += integrate_power_weighted(fpsi, gpsi, kHalfPi / 2.0, rtol).value;
    }
    return 4.0 * norm2(hc) * total;
}

double border_slope_closed_form(const HurstConfig& hc) {
    if (hc.regime() != Regime::rough_border)
        throw std::invalid_argument("border_slope_closed_form: requires the border regime");
    const double ln2 = 0.6931471805599453;
    if (hc.spatial_only()) return norm2(hc) * 2.0 * sphere_weight(hc) * ln2;
    const double h0 = *hc.h0, H = hc.hsum();
    double beta = std::exp(std::lgamma(1.0 - h0) + std::lgamma((hc.d + 1.0 - H) / 2.0) -
                           std::lgamma(1.0 - h0 + (hc.d + 1.0 - H) / 2.0));
    return norm2(hc) * std::pow(2.0, hc.d - H) * sphere_weight(hc) * ln2 * beta;
}

double young_limit_mean(const HurstConfig& hc, const LocalizedKernel& ker,
                        const Fk0Table& tab, double rtol) {
    require_space_time(hc, "young_limit_mean");
    if (hc.regime() != Regime::young)
        throw std::invalid_argument("young_limit_mean: requires the young regime");
    if (hc.d != 1 || ker.d != 1)
        throw std::invalid_argument("young_limit_mean: the transform table is d = 1");
    auto f = [&](const double* p) { return fourier_K(ker, tab, p[0], p[1]).real(); };
    std::vector<AxisWeight> axes{{1.0 - 2.0 * (*hc.h0), HUGE_VAL, 1.0},
                                 {1.0 - 2.0 * hc.hsum(), HUGE_VAL, 1.0}};
    QuadResult q = integrate_singular(f, axes, rtol);
    return 4.0 * norm2(hc) * q.value;
}

} // namespace krp
