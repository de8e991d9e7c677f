#include "axistar/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "axistar/numerics.hpp"

namespace axistar::geometry {

namespace {

std::shared_ptr<const numerics::SplineBasis> make_basis(const GridSpec& spec)
{
    if (spec.L < 0 || spec.L % 2) throw std::invalid_argument("GridSpec: L must be even and nonnegative");
    if (spec.nr < 3) throw std::invalid_argument("GridSpec: nr must be at least 3");
    if (!(spec.r_max > 0)) throw std::invalid_argument("GridSpec: r_max must be positive");
    std::vector<double> k(spec.nr + 1);
    for (int i = 0; i <= spec.nr; ++i) k[i] = spec.r_max * i / spec.nr;
    return std::make_shared<numerics::SplineBasis>(std::move(k));
}

// P_l, P_l' for the even degrees 0..L
struct EvenLegendre {
    std::vector<double> p, dp;
    EvenLegendre(int L, double c) : p(L / 2 + 1), dp(L / 2 + 1)
    {
        std::vector<double> a(L + 1), b(L + 1);
        numerics::legendre_all(L, c, a.data(), b.data());
        for (int s = 0; s <= L / 2; ++s) p[s] = a[2 * s], dp[s] = b[2 * s];
    }
};

void check_domain(const DeformationField& f, double r)
{
    if (r > f.spec().r_max * (1 + 1e-12)) throw GeometryError("point outside B_3");
}

// radial and polar-tangential components of grad zeta at (r, c); r > 0
void grad_components(const DeformationField& f, double r, double c, double* gr, double* gt)
{
    EvenLegendre P(f.L(), c);
    double sn = std::sqrt(std::max(0.0, 1 - c * c));
    double a = 0, b = 0;
    for (int s = 0; s < f.sectors(); ++s) {
        double v, dv;
        f.radial(s, r, &v, &dv);
        a += dv * P.p[s];
        b += v * P.dp[s];
    }
    *gr = a;
    *gt = -b * sn / r;  // component along e_theta
}

void ray_limit_components(const DeformationField& f, double c, double* gr, double* gt)
{
    EvenLegendre P(f.L(), c);
    double sn = std::sqrt(std::max(0.0, 1 - c * c));
    double a = 0, b = 0;
    for (int s = 0; s < f.sectors(); ++s) {
        double v, dv;
        f.radial(s, 0.0, &v, &dv);
        a += dv * P.p[s];
        b += dv * P.dp[s];
    }
    *gr = a;
    *gt = -b * sn;
}

Vec3 to_cartesian(const Vec3& xhat, double gr, double gt)
{
    // e_theta = (cos th cos ph, cos th sin ph, -sin th)
    double c = xhat[2];
    double sn = std::hypot(xhat[0], xhat[1]);
    double cp = sn > 0 ? xhat[0] / sn : 1.0, sp = sn > 0 ? xhat[1] / sn : 0.0;
    Vec3 et{c * cp, c * sp, -sn};
    return {gr * xhat[0] + gt * et[0], gr * xhat[1] + gt * et[1], gr * xhat[2] + gt * et[2]};
}

double norm(const Vec3& x) { return std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]); }

void require_admissible(const DeformationField& f)
{
    if (!f.admissible()) throw GeometryError("deformation field is not admissible");
}

}  // namespace

DeformationField::DeformationField(GridSpec spec)
    : DeformationField(spec, std::vector<double>((spec.L / 2 + 1) * spec.nr, 0.0))
{
}

DeformationField::DeformationField(GridSpec spec, std::vector<double> coeffs)
    : spec_(spec), basis_(make_basis(spec)), coeffs_(std::move(coeffs))
{
    if (static_cast<int>(coeffs_.size()) != unknowns())
        throw std::invalid_argument("DeformationField: coefficient count does not match the grid");
    for (int s = 0; s < sectors(); ++s) {
        std::vector<double> v(nr() + 1, 0.0);
        for (int k = 1; k <= nr(); ++k) v[k] = coeffs_[s * nr() + k - 1];
        splines_.emplace_back(basis_, std::move(v));
    }
    x_norm_ = x_norm_estimate(*this);
}

DeformationField DeformationField::radial_scaling(GridSpec spec, double eps)
{
    std::vector<double> c((spec.L / 2 + 1) * spec.nr, 0.0);
    for (int k = 1; k <= spec.nr; ++k) c[k - 1] = eps * spec.r_max * k / spec.nr;
    return DeformationField(spec, std::move(c));
}

void DeformationField::radial(int s, double r, double* f, double* df, double* d2f) const
{
    splines_[s].eval(r, f, df, d2f);
}

void DeformationField::along_ray(double c, double t, double* f, double* df) const
{
    EvenLegendre P(L(), c);
    double a = 0, b = 0;
    for (int s = 0; s < sectors(); ++s) {
        double v, dv;
        splines_[s].eval(t, &v, &dv);
        a += v * P.p[s];
        b += dv * P.p[s];
    }
    *f = a;
    if (df) *df = b;
}

DeformationField DeformationField::axpy(double a, const DeformationField& x) const
{
    if (x.spec_.L != spec_.L || x.spec_.nr != spec_.nr || x.spec_.r_max != spec_.r_max)
        throw std::invalid_argument("DeformationField::axpy: grid mismatch");
    std::vector<double> c = coeffs_;
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += a * x.coeffs_[i];
    return DeformationField(spec_, std::move(c));
}

double zeta_eval(const DeformationField& f, const Vec3& x)
{
    double r = norm(x);
    check_domain(f, r);
    if (r == 0) return 0.0;
    double z;
    f.along_ray(x[2] / r, r, &z, nullptr);
    return z;
}

Vec3 zeta_grad_ray_limit(const DeformationField& f, const Vec3& direction)
{
    double n = norm(direction);
    if (n == 0) throw std::invalid_argument("zeta_grad_ray_limit: zero direction");
    Vec3 xhat{direction[0] / n, direction[1] / n, direction[2] / n};
    double gr, gt;
    ray_limit_components(f, xhat[2], &gr, &gt);
    return to_cartesian(xhat, gr, gt);
}

Vec3 zeta_grad(const DeformationField& f, const Vec3& x)
{
    double r = norm(x);
    check_domain(f, r);
    if (r == 0) return zeta_grad_ray_limit(f, {0, 0, 1});
    Vec3 xhat{x[0] / r, x[1] / r, x[2] / r};
    double gr, gt;
    grad_components(f, r, xhat[2], &gr, &gt);
    return to_cartesian(xhat, gr, gt);
}

Vec3 g_apply(const DeformationField& f, const Vec3& x)
{
    require_admissible(f);
    double r = norm(x);
    if (r == 0) return {0, 0, 0};
    double z = zeta_eval(f, x);
    double s = 1 + z / r;
    return {x[0] * s, x[1] * s, x[2] * s};
}

Mat3 g_jacobian(const DeformationField& f, const Vec3& x)
{
    require_admissible(f);
    double r = norm(x);
    Mat3 J{};
    if (r == 0) {
        // g(t xhat) = t (1 + zeta'(0 xhat)) xhat along every ray; report the e3 ray
        Vec3 g = zeta_grad_ray_limit(f, {0, 0, 1});
        for (int i = 0; i < 3; ++i) J[i][i] = 1 + g[2];
        return J;
    }
    double z = zeta_eval(f, x);
    Vec3 gz = zeta_grad(f, x);
    Vec3 xh{x[0] / r, x[1] / r, x[2] / r};
    // J[j][i] = d g_j / d x_i
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            J[j][i] = (i == j) + gz[i] * xh[j] + z / r * ((i == j) - xh[i] * xh[j]);
    return J;
}

RayMapEval ray_map_eval(const DeformationField& f, const Vec3& x)
{
    return {x, g_apply(f, x), g_jacobian(f, x)};
}

double g_invert_radius(const DeformationField& f, double c, double rho)
{
    require_admissible(f);
    if (!(rho >= 0)) throw std::invalid_argument("g_invert_radius: negative radius");
    if (rho == 0) return 0.0;
    const double tmax = f.spec().r_max;
    double zmax;
    f.along_ray(c, tmax, &zmax, nullptr);
    double fhi = tmax + zmax - rho;
    if (fhi < 0) throw GeometryError("g_invert: target outside the image of B_3");
    double lo = 0, hi = tmax;
    double t = std::min(rho, tmax);
    for (int it = 0; it < 200; ++it) {
        double z, dz;
        f.along_ray(c, t, &z, &dz);
        double F = t + z - rho;
        if (F == 0) return t;
        (F < 0 ? lo : hi) = t;
        double slope = 1 + dz;
        double next = slope > 0 ? t - F / slope : 0.5 * (lo + hi);
        bool newton = next > lo && next < hi;
        if (!newton) next = 0.5 * (lo + hi);
        if (newton && std::fabs(next - t) <= 2e-16 * std::max(1.0, t)) return next;
        if (hi - lo <= 4e-16 * hi) return t;
        t = next;
    }
    throw GeometryError("g_invert: root not bracketed (field not admissible?)");
}

Vec3 g_invert(const DeformationField& f, const Vec3& target)
{
    double rho = norm(target);
    if (rho == 0) return {0, 0, 0};
    double t = g_invert_radius(f, target[2] / rho, rho);
    double s = t / rho;
    return {target[0] * s, target[1] * s, target[2] * s};
}

namespace {

double gradient_sup(const DeformationField& f, const XNormSampling& sampling, bool divide_by_r)
{
    if (sampling.radial_subdiv < 1 || sampling.polar < 2) throw std::invalid_argument("norm estimate: bad sampling");
    const int nrad = f.nr() * sampling.radial_subdiv;
    double best = 0;
    for (int j = 0; j < sampling.polar; ++j) {
        double th = 0.5 * std::numbers::pi * j / (sampling.polar - 1);
        double c = std::cos(th);
        double gr, gt;
        if (!divide_by_r) {
            ray_limit_components(f, c, &gr, &gt);
        } else {
            // f ~ r^2 a(c)/2 near 0: |grad f|/r -> |(a, -a_c sin(th)/2)|
            EvenLegendre P(f.L(), c);
            double a = 0, ac = 0;
            for (int s = 0; s < f.sectors(); ++s) {
                double v, dv, d2v;
                f.radial(s, 0.0, &v, &dv, &d2v);
                a += d2v * P.p[s];
                ac += d2v * P.dp[s];
            }
            gr = a;
            gt = -0.5 * ac * std::sqrt(std::max(0.0, 1 - c * c));
        }
        best = std::max(best, std::hypot(gr, gt));
        for (int k = 1; k <= nrad; ++k) {
            double r = f.spec().r_max * k / nrad;
            grad_components(f, r, c, &gr, &gt);
            best = std::max(best, std::hypot(gr, gt) / (divide_by_r ? r : 1.0));
        }
    }
    return best;
}

}  // namespace

double x_norm_estimate(const DeformationField& f, const XNormSampling& sampling)
{
    return gradient_sup(f, sampling, false);
}

double y_norm_estimate(const DeformationField& f, const XNormSampling& sampling)
{
    return gradient_sup(f, sampling, true);
}

bool is_admissible(const DeformationField& f, const XNormSampling& sampling)
{
    return x_norm_estimate(f, sampling) < kAdmissibleXNorm;
}

}  // namespace axistar::geometry
