#pragma once
#include <array>
#include <memory>
#include <stdexcept>
#include <vector>

#include "axistar/interpolation.hpp"

namespace axistar::geometry {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;

struct GridSpec {
    int L = 8;          // max even Legendre degree
    int nr = 64;        // radial intervals on [0, r_max]
    double r_max = 3;
};

/// Admissibility threshold on the sampled X-norm (1/6 with a 10% margin).
inline constexpr double kAdmissibleXNorm = 0.15;

class GeometryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// zeta(x) = sum_l zeta_l(|x|) P_l(cos theta), l = 0, 2, ..., L.  Each radial
/// profile is a not-a-knot cubic spline on nr+1 uniform knots with zeta_l(0) = 0.
class DeformationField {
public:
    DeformationField() : DeformationField(GridSpec{}) {}
    explicit DeformationField(GridSpec spec);
    /// coefficients sector-major: coeffs[s * nr + (k-1)] = zeta_{2s}(knot k), k = 1..nr
    DeformationField(GridSpec spec, std::vector<double> coeffs);

    /// zeta_0(r) = eps r
    static DeformationField radial_scaling(GridSpec spec, double eps);

    const GridSpec& spec() const { return spec_; }
    int L() const { return spec_.L; }
    int nr() const { return spec_.nr; }
    int sectors() const { return spec_.L / 2 + 1; }
    int unknowns() const { return sectors() * spec_.nr; }
    const std::vector<double>& knots() const { return basis_->knots(); }
    const std::shared_ptr<const numerics::SplineBasis>& basis() const { return basis_; }

    const std::vector<double>& coefficients() const { return coeffs_; }
    double coeff(int sector, int knot) const { return knot == 0 ? 0.0 : coeffs_[sector * nr() + knot - 1]; }

    /// radial profile zeta_{2s} at r in [0, r_max]
    void radial(int s, double r, double* f, double* df = nullptr, double* d2f = nullptr) const;

    /// zeta(t xhat) and its t-derivative for a direction with cos(theta) = c
    void along_ray(double c, double t, double* f, double* df) const;

    DeformationField axpy(double a, const DeformationField& x) const;  // this + a x

    /// x_norm_estimate with default sampling, computed at construction
    double x_norm() const { return x_norm_; }
    bool admissible() const { return x_norm_ < kAdmissibleXNorm; }

private:
    double x_norm_ = 0;
    GridSpec spec_;
    std::shared_ptr<const numerics::SplineBasis> basis_;
    std::vector<double> coeffs_;
    std::vector<numerics::CubicSpline> splines_;
};

struct RayMapEval {
    Vec3 point{};
    Vec3 image{};
    Mat3 jacobian{};
};

double zeta_eval(const DeformationField& f, const Vec3& x);
/// at x = 0 returns the ray limit along e3
Vec3 zeta_grad(const DeformationField& f, const Vec3& x);
Vec3 zeta_grad_ray_limit(const DeformationField& f, const Vec3& direction);

Vec3 g_apply(const DeformationField& f, const Vec3& x);
Mat3 g_jacobian(const DeformationField& f, const Vec3& x);
RayMapEval ray_map_eval(const DeformationField& f, const Vec3& x);

/// preimage radius t with t + zeta(t xhat) = rho along the direction cos(theta) = c
double g_invert_radius(const DeformationField& f, double c, double rho);
Vec3 g_invert(const DeformationField& f, const Vec3& target);

struct XNormSampling {
    int radial_subdiv = 4;  // samples per knot interval
    int polar = 33;         // uniform angles on [0, pi/2]
};

/// sup |grad zeta| over the sample set, ray limits at 0 included
double x_norm_estimate(const DeformationField& f, const XNormSampling& sampling = {});
/// sup |grad f(x)| / |x| over the same sample set; the limit at 0 assumes f = O(r^2)
double y_norm_estimate(const DeformationField& f, const XNormSampling& sampling = {});
bool is_admissible(const DeformationField& f, const XNormSampling& sampling = {});

}  // namespace axistar::geometry
