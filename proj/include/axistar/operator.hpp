#pragma once
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "axistar/field.hpp"
#include "axistar/geometry.hpp"
#include "axistar/profiles.hpp"
#include "axistar/spherical.hpp"

namespace axistar::op {

using geometry::DeformationField;
using geometry::GridSpec;
using geometry::Vec3;

struct Discretization {
    GridSpec grid{};
    int polar_nodes = 32;          // Gauss-Legendre nodes in cos(theta)
    bool defect_correction = true; // subtract the base state's discretization defect from T
};

/// Shared immutable inputs: base state, profiles, grids and the base potential.
class OperatorContext {
public:
    OperatorContext(spherical::RadialState base, profiles::DensityIntegrals profiles, Discretization disc = {});

    const spherical::RadialState& base() const { return base_; }
    const profiles::DensityIntegrals& profiles() const { return profiles_; }
    const Discretization& disc() const { return disc_; }
    const GridSpec& grid() const { return disc_.grid; }
    const std::shared_ptr<const field::RadialPanels>& panels() const { return panels_; }
    /// polar basis of the density and potential (all even degrees it resolves)
    const std::shared_ptr<const numerics::LegendreBasis>& polar() const { return polar_; }
    /// polar basis of the equations (degrees 0..L)
    const numerics::LegendreBasis& sample_polar() const { return *sample_polar_; }

    int sectors() const { return disc_.grid.L / 2 + 1; }
    int nr() const { return disc_.grid.nr; }
    int half_count() const { return polar_->half_count(); }
    int unknowns() const { return sectors() * nr(); }
    /// sample radius r_k = knot k, k = 1..nr
    double radius(int k) const { return disc_.grid.r_max * k / disc_.grid.nr; }
    double cos_node(int j) const { return polar_->node(polar_->half_index(j)); }
    /// sample point in the x1-x3 half plane; k = 1..nr
    Vec3 sample_point(int k, int j) const;

    /// (U0(x) - U0(0)) - (V0(x) - V0(0)) at the samples, index (k-1)*H + j.
    /// The corrected T is evaluated in the equivalent form -(dV(g(x)) - dV(0)) - (V0(g(x)) - V0(x)).
    const std::vector<double>& defect() const { return defect_; }
    const field::PotentialField& base_potential() const { return *v0_; }

private:
    spherical::RadialState base_;
    profiles::DensityIntegrals profiles_;
    Discretization disc_;
    std::shared_ptr<const field::RadialPanels> panels_;
    std::shared_ptr<const numerics::LegendreBasis> polar_;
    std::shared_ptr<const numerics::LegendreBasis> sample_polar_;
    std::shared_ptr<const field::PotentialField> v0_;
    std::vector<double> defect_;
};

struct OperatorOutput {
    int L = 0, nr = 0;
    std::vector<double> radii;    // r_1..r_nr
    std::vector<double> cosines;  // upper-half polar nodes
    std::vector<double> values;   // (k-1)*H + j
    std::vector<double> moments;  // s*nr + (k-1): degree-2s moment at r_k
    double origin = 0;            // value at x = 0
    double y_norm = 0;
};

/// discrete sup |grad F|/|x| of the sector splines through the moments (F_l(0) = 0)
double y_norm(const GridSpec& grid, const std::vector<double>& moments);

/// Everything at (gamma, zeta) that T, dT and the Jacobian share.
struct StateEval {
    double gamma = 0;
    DeformationField field;
    std::vector<double> t;        // preimage radius at the density nodes, i*H + j
    std::vector<double> a;        // d_u h U0'(t) / (1 + d_t zeta) at the density nodes
    std::shared_ptr<const field::AxiField> density;
    std::shared_ptr<const field::PotentialField> potential;
    std::vector<Vec3> images;     // g(x) at the samples
    std::vector<double> v_image;  // V(g(x))
    std::vector<double> vr_image; // grad V(g(x)) . xhat
    std::shared_ptr<const field::PotentialField> delta_potential;  // potential of rho_zeta - rho_0
    std::vector<double> dv_image; // dV(g(x)) - dV(0) for that potential
    std::vector<double> v0_shift; // V0(g(x)) - V0(x)
    double v_origin = 0;
    std::shared_ptr<const field::PotentialField::Probe> probe;  // at the images
};

StateEval evaluate_state(const OperatorContext& ctx, double gamma, const DeformationField& field,
                         bool with_derivative = true);

/// T(gamma, zeta); raw = true skips the defect correction
OperatorOutput apply_T(const OperatorContext& ctx, double gamma, const DeformationField& field, bool raw = false);
OperatorOutput apply_T(const OperatorContext& ctx, const StateEval& state, bool raw = false);

/// d_zeta T(gamma, zeta) xi
OperatorOutput apply_dT(const OperatorContext& ctx, double gamma, const DeformationField& field,
                        const DeformationField& xi);
OperatorOutput apply_dT(const OperatorContext& ctx, const StateEval& state, const DeformationField& xi);

struct JacobianMatrix {
    Eigen::MatrixXd matrix;  // rows: moment (s, k); columns: coefficient (s', k'), both sector-major
    int L = 0, nr = 0;
    Eigen::MatrixXd block(int s_row, int s_col) const { return matrix.block(s_row * nr, s_col * nr, nr, nr); }
};

JacobianMatrix assemble_jacobian(const OperatorContext& ctx, double gamma, const DeformationField& field);
JacobianMatrix assemble_jacobian(const OperatorContext& ctx, const StateEval& state);

/// Nodal matrix of K on sector l: values at knots 1..nr from nodal values at knots 1..nr.
Eigen::MatrixXd k_matrix(const spherical::RadialState& base, const GridSpec& grid, int l);
/// K applied sector by sector; the result holds (K xi)_l at the knots
DeformationField apply_K(const spherical::RadialState& base, const DeformationField& xi);
/// l = 0 sector through the Volterra form, at knots 1..nr
std::vector<double> apply_K_volterra(const spherical::RadialState& base, const DeformationField& xi);

struct SectorReport {
    int l = 0;
    double norm_inf = 0;      // max row sum
    double norm_2 = 0;
    double sigma_min = 0;     // smallest singular value of id - K_l
    double bound = 0;         // 3/(2l+1) for l >= 2
};
std::vector<SectorReport> sector_reports(const spherical::RadialState& base, const GridSpec& grid);

class NewtonError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct NewtonOptions {
    double tol = 1e-10;   // on the discrete Y-norm of T
    int max_iter = 12;
    int max_halvings = 10;
};

struct NewtonReport {
    bool converged = false;
    int iterations = 0;
    std::vector<double> residuals;         // Y-norm before each step and at exit
    std::vector<double> sector_condition;  // 2-norm condition numbers of the diagonal blocks of the last Jacobian
    std::string failure;
};

/// throws NewtonError when max_iter is exceeded or no admissible decreasing step exists
DeformationField newton_solve(const OperatorContext& ctx, double gamma, const DeformationField& initial,
                              const NewtonOptions& opt = {}, NewtonReport* report = nullptr);

/// max_r |rho_L| / max_r |rho_0| of the density at (gamma, zeta)
double legendre_tail(const OperatorContext& ctx, const StateEval& state);
inline constexpr double kTailLimit = 1e-4;

struct ContinuationStep {
    double gamma = 0;
    DeformationField field;
    NewtonReport newton;
    double residual = 0;
    double x_norm = 0;
    double tail = 0;
};

struct ContinuationResult {
    std::vector<ContinuationStep> steps;
    bool truncated = false;
    std::string stop_reason;
    double gamma_reached() const { return steps.empty() ? 0.0 : steps.back().gamma; }
};

/// gamma_k = k gamma_max / steps, k = 0..steps; secant predictor, Newton corrector
ContinuationResult continue_in_gamma(const OperatorContext& ctx, double gamma_max, int steps,
                                     const NewtonOptions& opt = {});
/// same over an explicit increasing gamma list starting at 0
ContinuationResult continue_along(const OperatorContext& ctx, const std::vector<double>& gammas,
                                  const NewtonOptions& opt = {});

}  // namespace axistar::op
