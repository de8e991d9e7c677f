#include <doctest.h>

#include <cmath>
#include <random>

#include "axistar/model.hpp"

using namespace axistar;
using namespace axistar::model;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Family {
    op::OperatorContext ctx;
    op::ContinuationResult run;
    std::vector<AxisymmetricState> states;
};

Family make_family(const profiles::RotationProfile& psi, double gamma_max, int steps)
{
    auto base = spherical::solve_base_state(1.0);
    profiles::DensityIntegrals prof(profiles::PolytropeProfile(1.0, base.e0), psi);
    Family fam{op::OperatorContext(base, prof), {}, {}};
    fam.run = op::continue_in_gamma(fam.ctx, gamma_max, steps);
    for (const auto& s : fam.run.steps) fam.states.push_back(assemble(fam.ctx, s.gamma, s.field));
    return fam;
}

const Family& skewed()
{
    static const Family fam = make_family(profiles::RotationProfile::skewed_rational(), 2.0, 4);
    return fam;
}

const Family& gaussian()
{
    static const Family fam = make_family(profiles::RotationProfile::even_gaussian(), 1.0, 2);
    return fam;
}

Vec3 meridional(double r, double c) { return {r * std::sqrt(1 - c * c), 0, r * c}; }

}  // namespace

TEST_CASE("state at gamma = 0 is the base state")
{
    const auto& fam = skewed();
    const auto& st = fam.states.front();
    const auto& base = fam.ctx.base();
    REQUIRE(st.gamma == 0);
    CHECK_FALSE(st.flagged);

    const auto& rho = *st.density;
    double drho = 0;
    for (int i = 0; i < rho.radial_count(); ++i)
        for (int j = 0; j < rho.polar_count(); ++j)
            drho = std::max(drho, std::fabs(rho.value(i, j) - base.rho0_at(rho.panels().node(i))));
    CHECK(drho <= 1e-6);

    double du = 0;
    for (double r : {0.0, 0.1, 0.37, 0.8, 0.99, 1.0, 1.3, 1.9, 3.5})
        for (double c : {0.0, 0.3, 0.71, 1.0}) du = std::max(du, std::fabs(st.u(meridional(r, c)) - base.u0_at(r)));
    CHECK(du <= 1e-6);
    CHECK(std::fabs(st.constant_c) <= 1e-12);  // V(0) = U0(0) for the base density

    CHECK(st.sphericity() <= 1e-10);
    for (double sb : st.boundary_radius) CHECK(sb == 1.0);
    CHECK(std::fabs(st.mass - base.mass) <= 1e-8);
}

TEST_CASE("assembled states satisfy the invariants")
{
    const auto& fam = skewed();
    REQUIRE_FALSE(fam.run.truncated);
    for (const auto& st : fam.states) {
        CAPTURE(st.gamma);
        for (const auto& c : st.checks) {
            CAPTURE(c.name);
            CAPTURE(c.value);
            CHECK(c.pass);
        }
        CHECK_FALSE(st.flagged);
        CHECK(st.constant_c > st.e0);
        CHECK(exterior_margin(st) > 0);
        CHECK(gauge_error(st, fam.ctx.base()) <= kGaugeTol);
        CHECK(poisson_residual(st).max_residual <= kPoissonTol);

        // far field: -|x| (U - C) -> M
        for (const Vec3& x : {Vec3{100, 0, 0}, Vec3{0, 0, 100}, Vec3{60, 0, 80}})
            CHECK(std::fabs(-100 * (st.u(x) - st.constant_c) - st.mass) <= 1e-4);
        CHECK(std::fabs(st.mass - 4 * kPi * st.multipoles[0]) <= 1e-14);
        if (st.gamma != 0) CHECK(st.sphericity() >= kNonSphericity);
    }
}

TEST_CASE("rotation flattens the density along the axis")
{
    const auto& st = skewed().states.back();
    REQUIRE(st.gamma == 2.0);
    // ray lengths of the support on the axis and in the equatorial plane differ
    CHECK(std::fabs(st.support_radius(1.0) - st.support_radius(0.0)) > 1e-6);
    CHECK(st.multipoles[1] != 0);
}

TEST_CASE("corrupting one density sample breaks the Poisson residual")
{
    const auto& fam = skewed();
    const auto& st = fam.states[2];
    auto values = st.density->values();
    int H = st.density->polar_count();
    int i = 0;
    while (st.density->panels().node(i) < 0.5) ++i;
    values[i * H + 3] *= 1.1;
    field::AxiField bad(st.density->panels_ptr(), st.density->polar_ptr(), values);
    auto broken = assemble_from_density(st.gamma, st.deformation, bad, fam.ctx.base(), fam.ctx.profiles());
    CHECK(broken.flagged);
    CHECK(poisson_residual(broken).max_residual > kPoissonTol);
    REQUIRE(broken.check("poisson residual") != nullptr);
    CHECK_FALSE(broken.check("poisson residual")->pass);
}

TEST_CASE("f_eval: cutoff, symmetry and the non-sphericity witness")
{
    const auto& st = skewed().states.back();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uni(-1, 1);

    SUBCASE("energy above the cutoff")
    {
        for (int n = 0; n < 100; ++n) {
            Vec3 x{uni(rng), uni(rng), uni(rng)};
            double speed = std::sqrt(2 * (st.e0 - st.u(x)) + 1e-3) * (1 + std::fabs(uni(rng)));
            if (!(speed > 0)) speed = 1;
            Vec3 v{speed, 0, 0};
            CHECK(f_eval(st, x, v) == 0);
        }
        CHECK(f_eval(st, {3, 0, 0}, {0, 0, 0}) == 0);
    }

    SUBCASE("rotations about x3 and the reflection")
    {
        double err = 0, fmax = 0;
        for (int n = 0; n < 1000; ++n) {
            Vec3 x{0.9 * uni(rng), 0.9 * uni(rng), 0.9 * uni(rng)};
            Vec3 v{0.5 * uni(rng), 0.5 * uni(rng), 0.5 * uni(rng)};
            double a = kPi * uni(rng), ca = std::cos(a), sa = std::sin(a);
            Vec3 rx{ca * x[0] - sa * x[1], sa * x[0] + ca * x[1], x[2]};
            Vec3 rv{ca * v[0] - sa * v[1], sa * v[0] + ca * v[1], v[2]};
            double f = f_eval(st, x, v);
            fmax = std::max(fmax, f);
            err = std::max(err, std::fabs(f_eval(st, rx, rv) - f));
            err = std::max(err, std::fabs(f_eval(st, {x[0], x[1], -x[2]}, {v[0], v[1], -v[2]}) - f));
        }
        CHECK(fmax > 0);
        CHECK(err <= 1e-12);
    }

    SUBCASE("v along x3 vs v along x2 at a point of the x1-axis")
    {
        Vec3 x{0.5, 0, 0};
        double eta = 0.5 * std::sqrt(2 * (st.e0 - st.u(x)));
        double f = f_eval(st, x, {0, 0, eta}), fp = f_eval(st, x, {0, eta, 0});
        CHECK(f > 0);
        CHECK(std::fabs(f - fp) > 1e-3 * f);

        const auto& st0 = skewed().states.front();
        double eta0 = 0.5 * std::sqrt(2 * (st0.e0 - st0.u(x)));
        CHECK(f_eval(st0, x, {0, 0, eta0}) == doctest::Approx(f_eval(st0, x, {0, eta0, 0})).epsilon(1e-14));
    }
}

TEST_CASE("mass current")
{
    SUBCASE("even psi: no current")
    {
        for (const auto& st : gaussian().states) {
            auto cf = velocity_moments(st);
            CHECK(cf.max_magnitude() <= 1e-12);
        }
    }

    SUBCASE("skewed psi: tangential, zero on the axis, average velocity vanishing at the boundary")
    {
        const auto& st = skewed().states.back();
        auto cf = velocity_moments(st);
        CHECK(cf.max_magnitude() > 0);
        for (std::size_t k = 0; k < cf.magnitude.size(); ++k) {
            CHECK(cf.magnitude[k] >= 0);
            if (cf.density[k] == 0) CHECK(cf.magnitude[k] == 0);
        }

        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> uni(-0.6, 0.6);
        for (int n = 0; n < 50; ++n) {
            Vec3 x{uni(rng), uni(rng), uni(rng)};
            Vec3 j = current_vector(st, x);
            double jn = std::sqrt(j[0] * j[0] + j[1] * j[1] + j[2] * j[2]);
            double r = std::hypot(x[0], x[1]);
            CHECK(jn > 0);
            // j = |j| e_t
            CHECK(std::fabs(j[0] + jn * x[1] / r) <= 1e-14 * (1 + jn));
            CHECK(std::fabs(j[1] - jn * x[0] / r) <= 1e-14 * (1 + jn));
            CHECK(j[2] == 0);
        }
        for (double z : {-0.7, 0.0, 0.3, 0.9}) {
            Vec3 j = current_vector(st, {0, 0, z});
            CHECK(j[0] == 0);
            CHECK(j[1] == 0);
            CHECK(st.profiles->current(st.gamma, 0.0, st.u({0, 0, z})) == 0);
        }

        double sb = st.support_radius(0.0), prev = INFINITY, vmax = 0;
        for (double v : cf.average_velocity) vmax = std::max(vmax, v);
        for (double delta : {1e-1, 1e-2, 1e-3, 1e-4}) {
            Vec3 x{sb * (1 - delta), 0, 0};
            double u = st.u(x);
            double vbar = st.profiles->current(st.gamma, x[0], u) / st.profiles->h(st.gamma, x[0], u);
            CAPTURE(delta);
            CHECK(vbar < prev);
            prev = vbar;
        }
        CHECK(prev <= 0.05 * vmax);
    }
}

TEST_CASE("characteristics conserve E and P")
{
    for (const auto* st : {&skewed().states.front(), &skewed().states.back()}) {
        CAPTURE(st->gamma);
        double dt = default_dt(*st);
        CHECK(dt == doctest::Approx(kDtFactor / std::sqrt(st->mass)));
        auto fine = stationarity_check(*st, 8, 4.0);
        auto coarse = stationarity_check(*st, 8, 4.0, 2 * dt);
        CHECK(fine.escaped == 0);
        CHECK(fine.max_momentum <= 1e-10);
        CHECK(coarse.max_momentum <= 1e-10);
        CHECK(fine.max_f <= 1e-6);
        double ratio = coarse.max_energy / fine.max_energy;
        CAPTURE(ratio);
        CHECK(ratio >= 3.5);
        CHECK(ratio <= 4.5);

        auto again = stationarity_check(*st, 8, 4.0);
        for (std::size_t n = 0; n < again.orbits.size(); ++n) CHECK(again.orbits[n].energy == fine.orbits[n].energy);
    }
    CHECK_THROWS_AS(stationarity_check(skewed().states.front(), 2, 0.0), std::invalid_argument);
}

TEST_CASE("density is continuous in gamma along the continuation")
{
    auto base = spherical::solve_base_state(1.0);
    profiles::DensityIntegrals prof(profiles::PolytropeProfile(1.0, base.e0),
                                    profiles::RotationProfile::skewed_rational());
    op::OperatorContext ctx(base, prof);
    std::vector<double> h, jump;
    // the jump of the last step behaves like 1 - (1 - 1/N)^4, so coarse N sit below slope 1
    for (int steps : {16, 32}) {
        auto run = op::continue_in_gamma(ctx, 1.0, steps);
        REQUIRE_FALSE(run.truncated);
        std::vector<std::vector<double>> rho;
        for (const auto& s : run.steps)
            rho.push_back(
                field::density_from_state(s.gamma, s.field, base, prof, ctx.panels(), ctx.polar()).values());
        double m = 0;
        for (std::size_t k = 0; k + 1 < rho.size(); ++k)
            for (std::size_t i = 0; i < rho[k].size(); ++i) m = std::max(m, std::fabs(rho[k + 1][i] - rho[k][i]));
        h.push_back(1.0 / steps);
        jump.push_back(m);
    }
    double slope = std::log(jump[0] / jump[1]) / std::log(h[0] / h[1]);
    CAPTURE(slope);
    CHECK(jump.back() < jump.front());
    CHECK(slope >= 0.9);
}
