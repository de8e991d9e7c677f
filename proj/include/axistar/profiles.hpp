#pragma once
#include <array>
#include <memory>
#include <string>
#include <vector>

#include "axistar/interpolation.hpp"
#include "axistar/numerics.hpp"

namespace axistar::profiles {

/// phi(E) = (E0 - E)_+^mu
struct PolytropeProfile {
    double mu = 1.0;
    double e0 = -1.0;

    PolytropeProfile() = default;
    PolytropeProfile(double mu_, double e0_);

    double operator()(double e) const;
    /// exponent of the spatial density, rho = c (E0 - U)^n
    double density_exponent() const { return mu + 1.5; }
};

double phi_eval(const PolytropeProfile& profile, double e);

enum class RotationKind { EvenGaussian, SkewedRational, CustomTable };

std::string to_string(RotationKind kind);
RotationKind rotation_kind_from_string(const std::string& name);

/// psi(P); constructed through the named factories, which check the axioms
class RotationProfile {
public:
    /// psi = exp(-a P^2), a > 0
    static RotationProfile even_gaussian(double a = 1.0);
    /// psi = 1 + b P^3/(1+P^4) + c P^4 exp(-P^2), 0 < b < 1, 0 <= c < b
    static RotationProfile skewed_rational(double b = 0.5, double c = 0.25);
    /// tabulated (P, psi) pairs, P = 0 included; cubic interpolation, constant beyond the ends
    static RotationProfile custom_table(std::vector<double> p, std::vector<double> psi);
    static RotationProfile custom_table_csv(const std::string& path);

    RotationKind kind() const { return kind_; }
    const std::vector<double>& parameters() const { return params_; }
    bool is_even() const;

    double value(double p) const;
    double deriv(double p) const;
    double second_deriv(double p) const;

    /// (psi(P)+psi(-P))/2 - 1, evaluated without cancellation for the closed-form kinds
    double even_minus_one(double p) const;
    /// derivative of the even part
    double even_deriv(double p) const;
    /// (psi(P)-psi(-P))/2
    double odd_part(double p) const;

private:
    RotationProfile() = default;
    void eval_table(double p, double* f, double* df, double* d2f) const;
    void validate_table() const;

    RotationKind kind_ = RotationKind::EvenGaussian;
    std::vector<double> params_;
    numerics::CubicSpline pos_, neg_;
    double pmax_ = 0, pmin_ = 0;
};

double psi_eval(const RotationProfile& profile, double p);
double psi_deriv(const RotationProfile& profile, double p);
double psi_second_deriv(const RotationProfile& profile, double p);

/// E = v^2/2 + U and P = x1 v2 - x2 v1
struct EnergyMomentum {
    double e = 0;
    double p = 0;
};

EnergyMomentum energy_momentum(const std::array<double, 3>& x, const std::array<double, 3>& v, double potential);

struct QuadratureOrders {
    int outer = 24;
    int inner = 24;
};

/// The density integral h(gamma, r, u), its partial derivatives and the
/// current magnitude.  Outer energy integral by Gauss-Jacobi after
/// E = E0 - (E0-u) t, inner velocity integral by Gauss-Legendre; the
/// psi == 1 part is taken from the closed form.
class DensityIntegrals {
public:
    DensityIntegrals(PolytropeProfile phi, RotationProfile psi, QuadratureOrders orders = {});

    const PolytropeProfile& polytrope() const { return phi_; }
    const RotationProfile& rotation() const { return psi_; }
    const QuadratureOrders& orders() const { return orders_; }

    /// 4 sqrt(2) pi B(mu+1, 3/2)
    double coefficient() const { return c_; }
    double h0(double u) const;
    double h0_du(double u) const;

    double h(double gamma, double r, double u) const;
    /// h(gamma, r, u) - h(0, r, u) without cancellation
    double h_excess(double gamma, double r, double u) const;
    double h_du(double gamma, double r, double u) const;
    double h_dr(double gamma, double r, double u) const;
    double current(double gamma, double r, double u) const;

private:
    double inner_even(double a) const;
    double inner_even_deriv(double a) const;
    double inner_odd(double a) const;

    PolytropeProfile phi_;
    RotationProfile psi_;
    QuadratureOrders orders_;
    double c_ = 0;
    numerics::QuadratureRule outer_h_, outer_du_;
    std::vector<double> tau_, wtau_;          // positive inner nodes
    std::vector<double> wfac_h_, wfac_du_;    // sqrt(1-t) at the outer nodes
};

double h_eval(const DensityIntegrals& d, double gamma, double r, double u);
double h_du(const DensityIntegrals& d, double gamma, double r, double u);
double h_dr(const DensityIntegrals& d, double gamma, double r, double u);
double current_magnitude(const DensityIntegrals& d, double gamma, double r, double u);

}  // namespace axistar::profiles
