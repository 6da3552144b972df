#pragma once

#include <complex>
#include <utility>
#include <vector>

#include "krp/spectral.hpp"

namespace krp {

// One 1-D factor of a tensor test function: amp * B(s*u + c) * cos(w*u), where
// B(v) = (1-v^2)^k on [-1,1]. amp is chosen so the factor's own sup-derivative
// norm (up to the order the ambient dimension demands) is just below 1.
struct BumpFactor {
    int k = 5;
    double amp = 1.0;
    double s = 1.0;
    double c = 0.0;
    double w = 0.0;
    std::vector<std::vector<double>> dcoef;  // derivative coefficients of B

    double lo() const { return (-1.0 - c) / s; }
    double hi() const { return (1.0 - c) / s; }
    double eval(double u, int order = 0) const;
    // exact transform of the factor: (1/2)[G(omega-w)+G(omega+w)] with
    // G(omega) = (1/s) e^{i omega c/s} P_k(omega/s)
    std::complex<double> fourier(double omega) const;
    double abs_fourier(double omega) const { return std::abs(fourier(omega)); }
    double sup_deriv(int order) const;   // sup of |f^(order)| over the support
    double abs_l1(int order) const;      // int |f^(order)| du

    static BumpFactor plain(int k, int norm_order);
    static BumpFactor affine(int k, int norm_order, double s, double c);
    static BumpFactor modulated(int k, int norm_order, double w);
};

// Transform of the unnormalized bump (1-v^2)^k: real, even, with a closed-form
// Bessel expression away from 0 and a power series near 0.
double bump_fourier_base(int k, double omega);

// Tensor test function psi(t,x) = f0(t) prod_i fi(x_i), supported in the unit
// ball of the parabolic max norm, with sup of all mixed partials up to order
// 2(d+1) at most 1.
struct TestFunction {
    int d = 1;
    int k = 5;
    std::vector<BumpFactor> factors;  // d+1 entries, index 0 is the time axis

    int cnorm_order() const { return 2 * (d + 1); }
    double eval(double t, const double* x) const;
    double mixed_first_deriv(double t, const double* x) const;  // d_t d_{x1}..d_{xd}
    std::complex<double> fourier(double lam, const double* xi) const;
    // spatial-only restriction prod_{i>=1} fi: transform and mixed derivative
    std::complex<double> fourier_spatial(const double* xi) const;
    double c_norm() const;  // sampled, using the factorized derivative maxima

    static TestFunction tensor_bump(int d, int k);
    // time factor modulated by cos(3t), first spatial factor moved to [-1,0]
    static TestFunction variant(int d, int k);
    // three smoothness orders plus the variant, lowest order first
    static std::vector<TestFunction> family(int d);
};

// S^delta_{s,x} psi(t,y) = delta^{-(d+2)} psi(delta^{-2}(t-s), delta^{-1}(y-x))
struct ScaledTestFunction {
    TestFunction psi;
    double delta = 1.0;
    double s = 0.0;
    std::vector<double> x;

    double eval(double t, const double* y) const;
    // e^{-i(lam s + xi.x)} Fpsi(delta^2 lam, delta xi)
    std::complex<double> fourier(double lam, const double* xi) const;
};

ScaledTestFunction scale_translate(const TestFunction& psi, double delta, double s,
                                   const std::vector<double>& x);

struct LatticePoint {
    double t = 0.0;
    std::vector<double> x;
};

// Points (2^{-2n} k0, 2^{-n} k1, ..., 2^{-n} kd) inside [-T,T] x box.
std::vector<LatticePoint> dyadic_lattice(int n, double T,
                                         const std::vector<std::pair<double, double>>& box);

// Stable oscillatory primitives. osc1 = int_0^y e^{-i lam z} dz; osc2 is the
// iterated version int_0^y dz int_0^z dw e^{-i lamt z} e^{-i lam w}, evaluated
// through a divided difference so lam -> 0 and lamt -> -lam stay accurate.
std::complex<double> osc1(double y, double lam);
std::complex<double> osc2(double y, double lam, double lamt);

// Oscillatory moment functionals of psi. Axis i = 0 points at the time
// variable; spatial mode drops the time axis (then i >= 1) and takes d-th
// roots instead of (d+1)-th.
double T_functional(const TestFunction& psi, int i, double lambda, bool spatial = false);
double Q_functional(const TestFunction& psi, int i, double lambda, double lambda_tilde,
                    bool spatial = false);

struct CutoffReport {
    std::vector<double> cutoffs;
    std::vector<double> increments;  // one fewer than cutoffs: ring contributions
    double value = 0.0;              // accumulated integral at the last cutoff
    double decay_ratio = 1.0;        // geometric mean of increment ratios
    bool stable = false;
};

// Weighted square-integrability probes for T and Q over growing truncations.
// criterion 1: int |Q(x1,x2)|^2 |x1|^{1-e1} |x2|^{1-e2} over [-R,R]^2
// criterion 2: same weight against T(x1+x2)^2, |x1| <= 1, |x2| growing
// criterion 3: T(x1+x2)^2 with |x1| in [1,R] and |x2| growing alongside
// The report never throws; non-decaying increments just yield stable = false.
CutoffReport check_TQ_integrability(const TestFunction& psi, int criterion, double e1,
                                    double e2, int i = 1, int rings = 6);

// Cutoff stability of int N(lam,xi) |Fpsi(lam,xi)| over growing boxes, using
// the factorized transform; per-axis pieces are multiplied into box values.
CutoffReport check_psi_weight_integral(const TestFunction& psi, const HurstConfig& hc);

} // namespace krp
