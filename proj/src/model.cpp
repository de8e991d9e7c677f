#include "axistar/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "axistar/parallel.hpp"

namespace axistar::model {

namespace {

constexpr double kPi = 3.14159265358979323846;

Vec3 meridional_point(double r, double c)
{
    return {r * std::sqrt(std::max(0.0, 1 - c * c)), 0.0, r * c};
}

double cyl_radius(const Vec3& x) { return std::hypot(x[0], x[1]); }

const std::vector<double> kExteriorScales = {1.01, 1.05, 1.1, 1.25, 1.5, 2, 3, 5, 10, 30, 100};

// U at random points vs. their rotations about x3 and reflections in x3 = 0
double symmetry_error(const AxisymmetricState& st)
{
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    double err = 0;
    for (int n = 0; n < 64; ++n) {
        Vec3 x{1.8 * uni(rng), 1.8 * uni(rng), 1.8 * uni(rng)};
        double a = kPi * uni(rng);
        Vec3 rx{std::cos(a) * x[0] - std::sin(a) * x[1], std::sin(a) * x[0] + std::cos(a) * x[1], x[2]};
        Vec3 fx{x[0], x[1], -x[2]};
        double u = st.u(x);
        err = std::max({err, std::fabs(st.u(rx) - u), std::fabs(st.u(fx) - u)});
    }
    return err;
}

}  // namespace

double AxisymmetricState::support_radius(double c) const
{
    double f = 0, df = 0;
    deformation.along_ray(c, 1.0, &f, &df);
    return 1 + f;
}

double AxisymmetricState::sphericity() const
{
    if (multipoles.size() < 2 || multipoles[0] == 0) return 0;
    return std::fabs(multipoles[1]) / multipoles[0];
}

const CheckResult* AxisymmetricState::check(const std::string& name) const
{
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

AxisymmetricState assemble(const op::OperatorContext& ctx, double gamma, const DeformationField& field)
{
    auto rho = field::density_from_state(gamma, field, ctx.base(), ctx.profiles(), ctx.panels(), ctx.polar());
    return assemble_from_density(gamma, field, std::move(rho), ctx.base(), ctx.profiles());
}

AxisymmetricState assemble_from_density(double gamma, const DeformationField& field, field::AxiField density,
                                        const spherical::RadialState& base,
                                        const profiles::DensityIntegrals& profiles)
{
    AxisymmetricState st;
    st.gamma = gamma;
    st.deformation = field;
    st.density = std::make_shared<const field::AxiField>(std::move(density));
    st.potential = std::make_shared<const field::PotentialField>(*st.density);
    st.profiles = std::make_shared<const profiles::DensityIntegrals>(profiles);
    st.e0 = profiles.polytrope().e0;
    st.constant_c = base.u0_at(0) - st.potential->value({0, 0, 0});
    st.mass = st.density->mass();

    double rmax = st.density->panels().r_max();
    for (int s = 0; s < st.potential->sectors(); ++s) {
        double A = 0, B = 0;
        st.potential->integrals(s, rmax, &A, &B);
        st.multipoles.push_back(A);
    }

    const auto& polar = st.density->polar();
    for (int j = polar.half_count() - 1; j >= 0; --j) st.boundary_cos.push_back(st.density->cos_node(j));
    st.boundary_cos.insert(st.boundary_cos.begin(), 0.0);
    st.boundary_cos.push_back(1.0);
    for (double c : st.boundary_cos) st.boundary_radius.push_back(st.support_radius(c));

    double gauge = gauge_error(st, base);
    st.checks.push_back({"gauge U = U0 o g^-1 on B2", gauge, kGaugeTol, gauge <= kGaugeTol});
    double margin = exterior_margin(st);
    st.checks.push_back({"exterior U > E0", margin, 0.0, margin > 0});
    st.checks.push_back({"C > E0", st.constant_c - st.e0, 0.0, st.constant_c > st.e0});
    double sym = symmetry_error(st);
    st.checks.push_back({"rotation and reflection symmetry", sym, 1e-12, sym <= 1e-12});
    auto pr = poisson_residual(st);
    st.checks.push_back({"poisson residual", pr.max_residual, kPoissonTol, pr.max_residual <= kPoissonTol});
    for (const auto& c : st.checks)
        if (!c.pass) st.flagged = true;
    return st;
}

double gauge_error(const AxisymmetricState& st, const spherical::RadialState& base)
{
    const auto& P = st.density->panels();
    double err = 0;
    for (int i = 0; i < P.node_count(); ++i) {
        double r = P.node(i);
        if (r >= 2) break;
        for (int j = 0; j < st.density->polar_count(); ++j) {
            double c = st.density->cos_node(j);
            double t = geometry::g_invert_radius(st.deformation, c, r);
            err = std::max(err, std::fabs(st.u(meridional_point(r, c)) - base.u0_at(t)));
        }
    }
    return err;
}

double exterior_margin(const AxisymmetricState& st)
{
    double m = INFINITY;
    for (std::size_t j = 0; j < st.boundary_cos.size(); ++j)
        for (double s : kExteriorScales) {
            Vec3 x = meridional_point(s * st.boundary_radius[j], st.boundary_cos[j]);
            m = std::min(m, st.u(x) - st.e0);
        }
    return m;
}

PoissonReport poisson_residual(const AxisymmetricState& st, double shell, std::vector<std::array<double, 3>>* map)
{
    const auto& P = st.density->panels();
    const auto& prof = *st.profiles;
    std::vector<double> radii;
    for (int i = 0; i < P.node_count(); ++i) {
        radii.push_back(P.node(i));
        if (i + 1 < P.node_count()) radii.push_back(0.5 * (P.node(i) + P.node(i + 1)));
    }
    PoissonReport rep;
    for (int j = 0; j < st.density->polar_count(); ++j) {
        double c = st.density->cos_node(j);
        double sb = st.support_radius(c);
        for (double r : radii) {
            if (std::fabs(r - sb) < shell) continue;
            Vec3 x = meridional_point(r, c);
            double v = 0;
            geometry::Mat3 h{};
            st.potential->eval(x, &v, nullptr, &h);
            double lap = h[0][0] + h[1][1] + h[2][2];
            double res = std::fabs(lap - 4 * kPi * prof.h(st.gamma, cyl_radius(x), v + st.constant_c));
            ++rep.points;
            if (map) map->push_back({r, c, res});
            if (res > rep.max_residual) {
                rep.max_residual = res;
                rep.r = r;
                rep.c = c;
            }
        }
    }
    return rep;
}

double f_eval(const AxisymmetricState& st, const Vec3& x, const Vec3& v)
{
    double e = 0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) + st.u(x);
    double phi = profiles::phi_eval(st.profiles->polytrope(), e);
    if (phi == 0) return 0;
    double p = x[0] * v[1] - x[1] * v[0];
    return phi * st.profiles->rotation().value(st.gamma * p);
}

double CurrentField::max_magnitude() const
{
    double m = 0;
    for (double x : magnitude) m = std::max(m, std::fabs(x));
    return m;
}

CurrentField velocity_moments(const AxisymmetricState& st)
{
    CurrentField cf;
    const auto& P = st.density->panels();
    int H = st.density->polar_count();
    for (int i = 0; i < P.node_count(); ++i) cf.radii.push_back(P.node(i));
    for (int j = 0; j < H; ++j) cf.cosines.push_back(st.density->cos_node(j));
    int n = P.node_count() * H;
    cf.magnitude.resize(n);
    cf.density.resize(n);
    cf.average_velocity.resize(n);
    parallel_for(P.node_count(), [&](int i) {
        for (int j = 0; j < H; ++j) {
            Vec3 x = meridional_point(cf.radii[i], cf.cosines[j]);
            double u = st.u(x), r = cyl_radius(x);
            int k = i * H + j;
            cf.magnitude[k] = st.profiles->current(st.gamma, r, u);
            cf.density[k] = st.profiles->h(st.gamma, r, u);
            cf.average_velocity[k] = cf.density[k] > 0 ? cf.magnitude[k] / cf.density[k] : 0.0;
        }
    });
    return cf;
}

Vec3 current_vector(const AxisymmetricState& st, const Vec3& x)
{
    double r = cyl_radius(x);
    if (r == 0) return {0, 0, 0};
    double j = st.profiles->current(st.gamma, r, st.u(x));
    return {-j * x[1] / r, j * x[0] / r, 0.0};
}

double default_dt(const AxisymmetricState& st) { return kDtFactor / std::sqrt(st.mass); }

StationarityReport stationarity_check(const AxisymmetricState& st, int n_orbits, double t_final, double dt,
                                      std::uint64_t seed)
{
    if (n_orbits < 0 || !(t_final > 0)) throw std::invalid_argument("stationarity_check: bad orbit count or time");
    StationarityReport rep;
    rep.dt = dt > 0 ? dt : default_dt(st);
    rep.t_final = t_final;
    rep.orbits.resize(n_orbits);
    int steps = static_cast<int>(std::ceil(t_final / rep.dt - 1e-9));
    double rmax = st.density->panels().r_max();

    // initial conditions drawn serially so the set does not depend on the thread count
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    auto direction = [&] {
        double z = 2 * uni(rng) - 1, a = 2 * kPi * uni(rng), s = std::sqrt(1 - z * z);
        return Vec3{s * std::cos(a), s * std::sin(a), z};
    };
    std::vector<Vec3> x0(n_orbits), v0(n_orbits);
    for (int n = 0; n < n_orbits; ++n) {
        Vec3 d = direction();
        double r = 0.9 * st.support_radius(d[2]) * std::cbrt(uni(rng));
        x0[n] = {r * d[0], r * d[1], r * d[2]};
        double vmax = std::sqrt(std::max(0.0, 2 * (st.e0 - st.u(x0[n]))));
        double speed = 0.95 * vmax * std::sqrt(uni(rng));
        Vec3 e = direction();
        v0[n] = {speed * e[0], speed * e[1], speed * e[2]};
    }

    parallel_for(n_orbits, [&](int n) {
        Vec3 x = x0[n], v = v0[n], g{};
        double u = 0;
        st.potential->eval(x, &u, &g, nullptr);
        auto energy = [&] { return 0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) + u + st.constant_c; };
        auto momentum = [&] { return x[0] * v[1] - x[1] * v[0]; };
        auto f_of = [&](double e, double p) {
            double phi = profiles::phi_eval(st.profiles->polytrope(), e);
            return phi == 0 ? 0.0 : phi * st.profiles->rotation().value(st.gamma * p);
        };
        double e_start = energy(), p_start = momentum(), f_start = f_of(e_start, p_start);
        OrbitDrift& d = rep.orbits[n];
        for (int k = 0; k < steps; ++k) {
            for (int a = 0; a < 3; ++a) v[a] -= 0.5 * rep.dt * g[a];
            for (int a = 0; a < 3; ++a) x[a] += rep.dt * v[a];
            if (std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) >= rmax) {
                d.escaped = true;
                break;
            }
            st.potential->eval(x, &u, &g, nullptr);
            for (int a = 0; a < 3; ++a) v[a] -= 0.5 * rep.dt * g[a];
            double e = energy(), p = momentum();
            d.energy = std::max(d.energy, std::fabs(e - e_start));
            d.momentum = std::max(d.momentum, std::fabs(p - p_start));
            d.f = std::max(d.f, std::fabs(f_of(e, p) - f_start));
        }
    });
    for (const auto& d : rep.orbits) {
        rep.max_energy = std::max(rep.max_energy, d.energy);
        rep.max_momentum = std::max(rep.max_momentum, d.momentum);
        rep.max_f = std::max(rep.max_f, d.f);
        if (d.escaped) ++rep.escaped;
    }
    return rep;
}

}  // namespace axistar::model
