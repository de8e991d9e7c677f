#include <doctest.h>

#include <cmath>
#include <numbers>

#include "axistar/profiles.hpp"
#include "axistar/spherical.hpp"
#include "oracles.hpp"

using namespace axistar::spherical;
using std::numbers::pi;

TEST_CASE("base state invariants across mu")
{
    for (double mu : {-0.25, 0.5, 1.0, 2.0, 3.0}) {
        auto s = solve_base_state(mu);
        auto rep = check_invariants(s);
        CHECK(rep.boundary_error <= 1e-8);
        CHECK(rep.integral_identity <= 1e-8);
        CHECK(rep.self_consistency <= 1e-7);
        CHECK(rep.center_curvature <= 1e-4);
        CHECK(rep.rho_monotone);
        CHECK(rep.u_monotone);
        CHECK(s.e0 == -s.mass);
        CHECK(s.mass > 0);
        CHECK(s.rho0_at(1.0) == 0.0);
        CHECK(s.rho0_at(2.5) == 0.0);
        CHECK(std::fabs(s.u0_prime_at(1.0) - s.mass) < 1e-12 * s.mass);
        CHECK(std::fabs(s.u0_at(1e9)) < 1e-8);
        CHECK(s.u0_prime_at(1 - 1e-12) == doctest::Approx(s.mass).epsilon(1e-8));
        CHECK(s.warnings.empty() == (mu >= 1));
    }
    CHECK_THROWS_AS(solve_base_state(3.5), std::invalid_argument);
    CHECK_THROWS_AS(solve_base_state(-0.5), std::invalid_argument);
}

TEST_CASE("mu=1 profile against fixed-step RK4 at 10x resolution")
{
    auto s = solve_base_state(1.0);
    const double n = 2.5, p = 2 / (1.0 + 0.5);
    std::vector<double> x(s.r.begin(), s.r.begin() + s.nr + 1);
    // the oracle takes about 10 x nr steps over its support
    auto ref = oracle::shoot_rk4(s.coefficient, n, 10 * s.nr, x);
    double R = ref.R;
    double mass = -std::pow(R, p + 1) * ref.dydr_at_R;
    CHECK(std::fabs(mass - s.mass) / s.mass < 1e-7);
    double worst = 0;
    for (int i = 0; i <= s.nr; ++i) {
        double u_ref = -mass - std::pow(R, p) * ref.y[i];
        worst = std::max(worst, std::fabs(s.u0[i] - u_ref) / std::fabs(u_ref));
        double du_ref = -std::pow(R, p + 1) * ref.dy[i];
        if (i > 0) CHECK(std::fabs(s.u0_prime[i] - du_ref) <= 1e-7 * std::fabs(s.u0_prime[i]) + 1e-12);
    }
    CHECK(worst <= 1e-7);
    MESSAGE("mu=1: M = " << s.mass << ", rho0(0) = " << s.rho0[0] << ", max rel dev = " << worst);
}

TEST_CASE("resolution doubling agrees")
{
    auto a = solve_base_state(1.0, {256, 1e-12, 4});
    auto b = solve_base_state(1.0, {512, 1e-12, 4});
    double worst = 0;
    for (double r = 0; r <= 4; r += 0.001) {
        worst = std::max(worst, std::fabs(a.u0_at(r) - b.u0_at(r)));
        worst = std::max(worst, std::fabs(a.rho0_at(r) - b.rho0_at(r)));
    }
    CHECK(worst <= 1e-7);
}

TEST_CASE("finite-difference Poisson residual inside the support")
{
    for (double mu : {0.5, 1.0, 2.0}) {
        auto s = solve_base_state(mu);
        axistar::profiles::DensityIntegrals d(axistar::profiles::PolytropeProfile(mu, s.e0),
                                              axistar::profiles::RotationProfile::even_gaussian());
        const double h = 3e-5;  // truncation ~h^2 U4/12 against roundoff ~eps |U| / h^2
        double worst = 0;
        for (double r = 0.05; r <= 0.95; r += 0.005) {
            double lap = (s.u0_at(r + h) - 2 * s.u0_at(r) + s.u0_at(r - h)) / (h * h)
                         + (s.u0_at(r + h) - s.u0_at(r - h)) / (h * r);
            worst = std::max(worst, std::fabs(lap - 4 * pi * d.h(0, r, s.u0_at(r))));
        }
        CHECK(worst <= 1e-5);
    }
}

TEST_CASE("interpolants between nodes")
{
    auto s = solve_base_state(2.0);
    double prev = INFINITY;
    for (double r = 0; r < 1.2; r += 1e-3) {
        double v = s.rho0_at(r);
        CHECK(v <= prev);
        prev = v;
        double h = 1e-6;
        if (r > 0.01 && r < 0.99) {
            double fd = (s.u0_at(r + h) - s.u0_at(r - h)) / (2 * h);
            CHECK(std::fabs(fd - s.u0_prime_at(r)) < 1e-8);
            double fd2 = (s.u0_prime_at(r + h) - s.u0_prime_at(r - h)) / (2 * h);
            CHECK(std::fabs(fd2 - s.u0_second_at(r)) < 1e-6);
        }
    }
}
