#pragma once
#include <string>
#include <vector>

#include "axistar/interpolation.hpp"

namespace axistar::spherical {

/// Spherically symmetric polytropic state normalized to support radius 1,
/// U0 -> 0 at infinity and E0 = U0(1) = -M.
struct RadialState {
    double mu = 1;
    double e0 = 0;
    double mass = 0;
    double coefficient = 0;  // rho0 = coefficient * (E0 - U0)^(mu + 3/2)
    double tol = 0;
    int nr = 0;
    double r_out = 4;

    /// interior nodes r[0..nr] on [0,1] followed by exterior nodes up to r_out
    std::vector<double> r, rho0, u0, u0_prime, u0_second;
    std::vector<std::string> warnings;

    double density_exponent() const { return mu + 1.5; }

    double u0_at(double radius) const;
    double u0_prime_at(double radius) const;
    double u0_second_at(double radius) const;
    double rho0_at(double radius) const;
    /// d rho0 / dr
    double rho0_prime_at(double radius) const;

    /// interpolants over the interior nodes; built by finalize()
    void finalize();

private:
    numerics::QuinticHermite u_;
};

double u0_at(const RadialState& s, double radius);
double u0_prime_at(const RadialState& s, double radius);
double rho0_at(const RadialState& s, double radius);

struct SolveOptions {
    int nr = 256;
    double tol = 1e-12;
    double r_out = 4;
};

/// Shoot y = E0 - U from y(0) = 1, find the first zero, rescale to radius 1.
/// Throws std::runtime_error when no zero is found or the invariants fail.
RadialState solve_base_state(double mu, const SolveOptions& opt = {});

struct InvariantReport {
    double boundary_error = 0;       // |U0(1) - E0|
    double integral_identity = 0;    // max relative error of U0' against 4 pi/r^2 int s^2 rho0
    double self_consistency = 0;     // max |rho0 - h(0, U0)| relative to rho0(0)
    double center_curvature = 0;     // relative error of U0''(0) against 4 pi rho0(0)/3 (one-sided)
    bool rho_monotone = false;
    bool u_monotone = false;
};

/// Checks the state's defining properties on its own grid.
InvariantReport check_invariants(const RadialState& s);

}  // namespace axistar::spherical
