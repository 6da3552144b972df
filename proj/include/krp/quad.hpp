#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace krp {

struct QuadResult {
    double value = 0.0;
    double abs_error = 0.0;
    std::size_t evals = 0;
    bool converged = false;
};

// Adaptive Gauss-Kronrod (7-15) on a finite interval. Splits the worst cell
// until the summed error estimate meets atol + rtol*|value| or max_cells is hit.
QuadResult adaptive_gk(const std::function<double(double)>& f, double a, double b,
                       double rtol = 1e-10, double atol = 0.0, std::size_t max_cells = 4000);

// Integral of |x|^gamma * f(x) over [0, b] with gamma > -1. The power weight is
// absorbed exactly by u = x^(gamma+1)/(gamma+1), so the integrand handed to the
// adaptive rule is bounded near 0.
QuadResult integrate_power_weighted(const std::function<double(double)>& f, double gamma,
                                    double b, double rtol = 1e-10, double atol = 0.0);

// Integral of |x|^gamma * f(x) over [b, inf) by geometric shells [b 2^k, b 2^(k+1)].
// Stops when a shell contributes less than the tolerance; the last shell size is
// folded into the error estimate, so slowly decaying f is reported, not hidden.
QuadResult integrate_tail_shells(const std::function<double(double)>& f, double gamma,
                                 double b, double rtol = 1e-10, double atol = 0.0,
                                 int max_shells = 60);

// Full half-line weighted integral: power-substituted core [0, split] plus shells.
QuadResult integrate_weighted_halfline(const std::function<double(double)>& f, double gamma,
                                       double split = 1.0, double rtol = 1e-10,
                                       double atol = 0.0);

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    double slope_stderr = 0.0;
};

// Ordinary least squares y = slope*x + intercept.
SlopeFit slope_fit(const std::vector<double>& x, const std::vector<double>& y);

// Product-weight box integral: prod_i |x_i|^gamma_i * f(x) over [0, upper_i]^dim
// (upper_i may be infinity), evaluated by nested 1-D adaptive rules with the
// power substitution applied on each axis. Inner tolerances are tightened one
// order per nesting level.
struct AxisWeight {
    double gamma = 0.0;      // weight exponent, > -1
    double upper = 1.0;      // box edge; HUGE_VAL for a shell-summed tail
    double split = 1.0;      // where the substituted core hands over to shells
};

QuadResult integrate_singular(const std::function<double(const double*)>& f,
                              const std::vector<AxisWeight>& axes, double rtol = 1e-8);

} // namespace krp
