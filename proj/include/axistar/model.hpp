#pragma once
#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "axistar/field.hpp"
#include "axistar/geometry.hpp"
#include "axistar/operator.hpp"
#include "axistar/profiles.hpp"
#include "axistar/spherical.hpp"

namespace axistar::model {

using geometry::DeformationField;
using geometry::Vec3;

struct CheckResult {
    std::string name;
    double value = 0;
    double limit = 0;
    bool pass = false;
};

/// (f, rho, U) at one gamma.  U = V + C with V the multipole potential of rho.
struct AxisymmetricState {
    double gamma = 0;
    DeformationField deformation;
    std::shared_ptr<const field::AxiField> density;
    std::shared_ptr<const field::PotentialField> potential;  // V
    std::shared_ptr<const profiles::DensityIntegrals> profiles;
    double constant_c = 0;
    double e0 = 0;
    double mass = 0;
    std::vector<double> multipoles;  // q_l = int r^(l+2) rho_l dr, l = 0, 2, ...
    std::vector<double> boundary_cos, boundary_radius;  // |g(x)| for |x| = 1
    std::vector<CheckResult> checks;
    bool flagged = false;

    double u(const Vec3& x) const { return potential->value(x) + constant_c; }
    Vec3 grad_u(const Vec3& x) const { return potential->grad(x); }
    /// 1 + zeta(x) on the unit sphere
    double support_radius(double c) const;
    /// |q_2| / q_0
    double sphericity() const;
    const CheckResult* check(const std::string& name) const;
};

inline constexpr double kGaugeTol = 1e-6;
inline constexpr double kPoissonTol = 1e-4;
inline constexpr double kShell = 0.05;
inline constexpr double kNonSphericity = 1e-8;

/// density from zeta on the context's grid, then the state and its checks
AxisymmetricState assemble(const op::OperatorContext& ctx, double gamma, const DeformationField& field);
/// state from given density samples (for reloaded exports)
AxisymmetricState assemble_from_density(double gamma, const DeformationField& field, field::AxiField density,
                                        const spherical::RadialState& base,
                                        const profiles::DensityIntegrals& profiles);

/// sup |U - U0 o g^-1| over sample points in B_2
double gauge_error(const AxisymmetricState& state, const spherical::RadialState& base);
/// min (U - E0) over s_b(theta) * {1.01 .. 100}
double exterior_margin(const AxisymmetricState& state);

struct PoissonReport {
    double max_residual = 0;
    double r = 0, c = 0;   // location of the max
    int points = 0;
};
/// |tr Hess U - 4 pi h(gamma, r(x), U(x))| at the density nodes and radial midpoints,
/// skipping points within `shell` of the support boundary
/// map, if given, receives (r, cos, residual) for every point checked
PoissonReport poisson_residual(const AxisymmetricState& state, double shell = kShell,
                               std::vector<std::array<double, 3>>* map = nullptr);

/// phi(v^2/2 + U(x)) psi(gamma P)
double f_eval(const AxisymmetricState& state, const Vec3& x, const Vec3& v);

struct CurrentField {
    std::vector<double> radii, cosines;  // density nodes
    std::vector<double> magnitude;       // i*H + j
    std::vector<double> density;
    std::vector<double> average_velocity;  // magnitude / density, 0 where density = 0
    double max_magnitude() const;
};
CurrentField velocity_moments(const AxisymmetricState& state);
/// j(x) = |j| e_t(x), e_t = (-x2, x1, 0)/r(x)
Vec3 current_vector(const AxisymmetricState& state, const Vec3& x);

struct OrbitDrift {
    double energy = 0, momentum = 0, f = 0;
    bool escaped = false;
};
struct StationarityReport {
    double dt = 0, t_final = 0;
    std::vector<OrbitDrift> orbits;
    double max_energy = 0, max_momentum = 0, max_f = 0;
    int escaped = 0;
};
inline constexpr double kDtFactor = 2.5e-4;
/// dt = kDtFactor M^(-1/2)
double default_dt(const AxisymmetricState& state);
/// leapfrog characteristics started inside the support; dt <= 0 selects default_dt
StationarityReport stationarity_check(const AxisymmetricState& state, int n_orbits, double t_final, double dt = 0,
                                      std::uint64_t seed = 1);

}  // namespace axistar::model
