#pragma once

#include <complex>
#include <vector>

namespace krp {

// Heat kernel p_s(x) = (2 pi s)^{-d/2} exp(-|x|^2/(2s)). Throws for s <= 0.
double heat_kernel(double s, const double* x, int d);

// Space-time transform of p: (|xi|^2/2 + i lam)^{-1}. Throws at the origin.
std::complex<double> heat_fourier(double lam, const double* xi, int d);

enum class ProfileKind { smooth_exp, poly_c3 };

// Splitting p = K + R of the heat kernel into a compactly supported singular
// part and a globally smooth remainder. The split is driven by a cutoff
// profile composed with a parabolic gauge, so the dyadic dilates of the
// annulus bump telescope exactly and K picks up precisely the near-origin
// singularity. All evaluators are pure; the object is immutable after build.
struct LocalizedKernel {
    int d = 1;
    int l_max = 24;
    ProfileKind kind = ProfileKind::smooth_exp;

    // (s^2 + sum x_i^4)^{1/4}; homogeneous of degree 1 under (s,x) -> (4s, 2x)
    double gauge(double s, const double* x) const;
    // cutoff: 1 on [0, 1/2], 0 on [1, inf), smooth transition between
    double profile(double u) const;
    // profile(g) - profile(2g), supported on the annulus 1/4 <= g <= 1
    double annulus_bump(double s, const double* x) const;
    // base function: annulus_bump * p for s > 0, zero otherwise
    double k0(double s, const double* x) const;
    // dyadic dilate 2^{l d} k0(2^{2l} s, 2^l x)
    double term(int l, double s, const double* x) const;

    double eval_K(double s, const double* x) const;         // p * profile(g)
    double eval_R(double s, const double* x) const;         // p * (1 - profile(g))
    double eval_K_series(double s, const double* x) const;  // sum of term(0..l_max)
    double eval_R_series(double s, const double* x) const;  // sum of term(-l_max..-1)

    // | sum_{|l| <= l_max} annulus_bump(dyadic dilate) - 1 | at (s,x) != 0
    double partition_residual(double s, const double* x) const;

    // time integral of K at fixed x; finite by the compact support in the gauge
    double tilde_K(const double* x) const;
};

LocalizedKernel build_localized_kernel(int d, int l_max = 24,
                                       ProfileKind kind = ProfileKind::smooth_exp);

// Dense grids of the base transform F k0 for d = 1, built by padded FFTs of
// the sampled base function. Values are stored on the quarter lattice
// lam, xi >= 0; the other quadrants follow from k0 being real and even in x.
// A finely spaced grid covers the low frequencies where the transform is
// large. A coarser grid extends to the far field; it reaches much further in
// time frequency than in space frequency because the growing dilates of the
// remainder series amplify table values by 4^m, so dropped terms only become
// negligible once the time argument is past ~2000. Queries use bicubic
// interpolation and return 0 beyond the usable extents, where the transform
// has decayed below the recorded boundary magnitude.
class Fk0Table {
public:
    std::complex<double> at(double lam, double xi) const;
    double time_extent() const { return coarse_.extl; }
    double space_extent() const { return coarse_.extx; }
    double fine_extent() const { return fine_.extl; }
    double boundary_mag() const { return boundary_; }
    double mass() const { return mass_; }

private:
    friend Fk0Table build_fk0_table(const LocalizedKernel& ker);
    struct Grid {
        int nl = 0, nx = 0;
        double dfl = 0.0, dfx = 0.0;
        double extl = 0.0, extx = 0.0;
        std::vector<std::complex<double>> v;
        std::complex<double> node(int j, int k) const;
        std::complex<double> interp(double lam, double xi) const;
    };
    Grid fine_, coarse_;
    double boundary_ = 0.0;
    double mass_ = 0.0;
};

Fk0Table build_fk0_table(const LocalizedKernel& ker);

// Dyadic series for the transforms of K and R (d = 1). fourier_K sums the
// shrinking dilates of the table; fourier_R sums the growing ones, whose
// out-of-table terms are negligible by smoothness of R.
std::complex<double> fourier_K(const LocalizedKernel& ker, const Fk0Table& tab, double lam,
                               double xi);
std::complex<double> fourier_R(const LocalizedKernel& ker, const Fk0Table& tab, double lam,
                               double xi);

// Spatial transform of tilde_K for d = 2, assembled from the zero-frequency
// time slice of the base transform: a grid of F[int k0 ds] plus the dyadic
// series. Real and even in each coordinate by symmetry of the construction.
class TildeKTransform {
public:
    double at(double xi1, double xi2) const;
    double table_extent() const { return ext_; }
    int l_max() const { return l_max_; }

private:
    friend TildeKTransform build_tilde_k_transform(const LocalizedKernel& ker);
    int n_ = 0;
    int l_max_ = 24;
    double dfreq_ = 0.0;
    double ext_ = 0.0;
    std::vector<double> v_;
    double node(int j, int k) const;
    double base(double xi1, double xi2) const;
};

TildeKTransform build_tilde_k_transform(const LocalizedKernel& ker);

} // namespace krp
