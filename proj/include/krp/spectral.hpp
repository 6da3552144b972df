#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace krp {

enum class Regime { young, rough_subcritical, rough_border, unsupported };

const char* regime_name(Regime r);

// Hurst data for the noise. With h0 set the model is space-time (one time index
// plus d spatial indices); without it the noise is spatial only (d >= 2).
struct HurstConfig {
    int d = 1;
    std::optional<double> h0;
    std::vector<double> h;

    bool spatial_only() const { return !h0.has_value(); }
    double hsum() const;             // H = sum of spatial indices
    double roughness() const;        // 2H0 + H, or H in the spatial model
    double border_value() const;     // d+1, or d-1 in the spatial model
    Regime regime() const;
    // scaling exponent of the first-level variance: d+2-(2H0+H), spatial d-H
    double var_exponent() const;
    void validate() const;           // throws std::invalid_argument

    static HurstConfig space_time(double h0, std::vector<double> h);
    static HurstConfig spatial(std::vector<double> h);
};

// Spectral density factor of the noise: 1/(|lam|^{2H0-1} prod |xi_i|^{2H_i-1}).
double spectral_weight(const HurstConfig& hc, double lam, const double* xi);
double spectral_weight_spatial(const HurstConfig& hc, const double* xi);

// Smooth approximate-identity profiles. Only |F rho| enters the quantitative
// formulas, and for both shipped kinds it factors across axes, so the per-axis
// moduli are exposed directly alongside the full complex transform.
struct Mollifier {
    enum class Kind { gauss_gauss, indicator_heat };
    Kind kind = Kind::gauss_gauss;

    std::string name() const;
    double time_factor_abs(double lam) const;
    double space_factor_abs(double xi) const;   // per spatial axis
    double abs2(double lam, const double* xi, int d) const;
    double abs2_spatial(const double* xi, int d) const;
    std::complex<double> fourier(double lam, const double* xi, int d) const;
    std::complex<double> fourier_spatial(const double* xi, int d) const;

    static Mollifier gauss_gauss() { return {Kind::gauss_gauss}; }
    static Mollifier indicator_heat() { return {Kind::indicator_heat}; }
    static Mollifier by_name(const std::string& name);
};

struct NormalizationConstants {
    double c_time = 1.0;             // 1 in the spatial model
    std::vector<double> c_space;
    double c_total = 1.0;            // product of all factors
    double max_rel_disagreement = 0.0;  // between the two quadrature schemes
};

// Per-index constants c = (int |e^{i u}-1|^2 / |u|^{2H+1} du)^{-1/2}, computed by
// two independent quadrature schemes which must agree to cross_tol.
NormalizationConstants normalization_constants(const HurstConfig& hc, double rtol = 1e-10,
                                               double cross_tol = 1e-6);

// The underlying 1-D integral, exposed for direct testing.
double norm_integral_1d(double H, double rtol = 1e-10);
double norm_integral_1d_alt(double H, double rtol = 1e-10);  // second scheme

// Decay/shape certificate for a mollifier: checks |F rho| <= c_tau *
// |lam|^{-tau0} prod |xi_i|^{-tau_i} over a sample grid for each requested tau,
// plus unit mass and a finite Lipschitz bound for F rho.
struct RhoCertRow {
    double tau0 = 0.0;
    std::vector<double> tau;
    double c_tau = 0.0;     // smallest admissible constant found on the grid
    bool pass = false;
};

struct RhoCertificate {
    std::vector<RhoCertRow> rows;
    double unit_mass_residual = 0.0;
    double lipschitz_estimate = 0.0;
    bool pass = false;
};

RhoCertificate verify_assumption_rho(const Mollifier& m, int d,
                                     const std::vector<std::vector<double>>& taus,
                                     double grid_max = 40.0, int grid_pts = 33);

} // namespace krp
