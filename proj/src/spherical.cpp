#include "axistar/spherical.hpp"

#include <array>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "axistar/numerics.hpp"
#include "axistar/profiles.hpp"

namespace axistar::spherical {

namespace odeint = boost::numeric::odeint;
using std::numbers::pi;

double RadialState::u0_at(double radius) const
{
    if (radius >= 1) return -mass / radius;
    return u_(std::max(radius, 0.0));
}

double RadialState::u0_prime_at(double radius) const
{
    if (radius >= 1) return mass / (radius * radius);
    double f, df;
    u_.eval(std::max(radius, 0.0), &f, &df);
    return df;
}

double RadialState::u0_second_at(double radius) const
{
    if (radius >= 1) return -2 * mass / (radius * radius * radius);
    double f, df, d2f;
    u_.eval(std::max(radius, 0.0), &f, &df, &d2f);
    return d2f;
}

double RadialState::rho0_at(double radius) const
{
    if (radius >= 1) return 0.0;
    double y = e0 - u0_at(radius);
    return y > 0 ? coefficient * std::pow(y, density_exponent()) : 0.0;
}

double RadialState::rho0_prime_at(double radius) const
{
    if (radius >= 1) return 0.0;
    double y = e0 - u0_at(radius);
    if (!(y > 0)) return 0.0;
    double n = density_exponent();
    return -coefficient * n * std::pow(y, n - 1) * u0_prime_at(radius);
}

void RadialState::finalize()
{
    std::vector<double> x(r.begin(), r.begin() + nr + 1);
    std::vector<double> u(u0.begin(), u0.begin() + nr + 1);
    std::vector<double> du(u0_prime.begin(), u0_prime.begin() + nr + 1);
    std::vector<double> d2u(u0_second.begin(), u0_second.begin() + nr + 1);
    u_ = numerics::QuinticHermite(x, u, du, d2u);
}

double u0_at(const RadialState& s, double radius) { return s.u0_at(radius); }
double u0_prime_at(const RadialState& s, double radius) { return s.u0_prime_at(radius); }
double rho0_at(const RadialState& s, double radius) { return s.rho0_at(radius); }

namespace {

using State = std::array<double, 2>;  // y and w = r^2 y'

struct LaneEmden {
    double a;  // 4 pi c
    double n;
    void operator()(const State& s, State& ds, double r) const
    {
        ds[0] = s[1] / (r * r);
        double y = s[0];
        ds[1] = -a * r * r * (y > 0 ? std::pow(y, n) : 0.0);
    }
    State series(double r) const
    {
        double r2 = r * r;
        double y = 1 - a * r2 / 6 + a * a * n * r2 * r2 / 120;
        double dy = -a * r / 3 + a * a * n * r2 * r / 30;
        return {y, r2 * dy};
    }
};

const double kSeriesRadius = 1e-4;

// integrate from the series start to every radius in `times` (increasing);
// returns the states there
std::vector<State> march(const LaneEmden& sys, const std::vector<double>& times, double tol)
{
    std::vector<State> out(times.size());
    std::vector<double> t{kSeriesRadius};
    std::size_t first = 0;
    while (first < times.size() && times[first] <= kSeriesRadius) {
        out[first] = sys.series(times[first]);
        ++first;
    }
    if (first == times.size()) return out;
    t.insert(t.end(), times.begin() + first, times.end());
    State s = sys.series(kSeriesRadius);
    std::size_t k = 0;
    auto stepper = odeint::make_controlled(tol, tol, odeint::runge_kutta_dopri5<State>());
    odeint::integrate_times(stepper, sys, s, t.begin(), t.end(), 1e-3,
                            [&](const State& st, double) {
                                if (k > 0) out[first + k - 1] = st;
                                ++k;
                            });
    return out;
}

}  // namespace

RadialState solve_base_state(double mu, const SolveOptions& opt)
{
    profiles::PolytropeProfile phi(mu, -1.0);  // validates mu; E0 is fixed after rescaling
    if (opt.nr < 8) throw std::invalid_argument("solve_base_state: nr must be at least 8");
    if (!(opt.tol > 0)) throw std::invalid_argument("solve_base_state: tol must be positive");
    if (!(opt.r_out >= 4)) throw std::invalid_argument("solve_base_state: r_out must be at least 4");

    const double c = 4 * std::numbers::sqrt2 * pi * std::beta(mu + 1, 1.5);
    const double n = mu + 1.5;
    const LaneEmden sys{4 * pi * c, n};
    const double ode_tol = std::min(opt.tol, 1e-12) * 0.1;

    // bracket the first zero with the dense-output stepper
    auto dense = odeint::make_dense_output(ode_tol, ode_tol, odeint::runge_kutta_dopri5<State>());
    State s0 = sys.series(kSeriesRadius);
    dense.initialize(s0, kSeriesRadius, 1e-3);
    const double r_max = 1e4;
    while (dense.current_state()[0] > 0) {
        dense.do_step(sys);
        if (dense.current_time() > r_max)
            throw std::runtime_error("solve_base_state: no zero of y found (support not compact)");
    }
    double lo = dense.previous_time(), hi = dense.current_time();
    State tmp;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        double mid = 0.5 * (lo + hi);
        dense.calc_state(mid, tmp);
        (tmp[0] > 0 ? lo : hi) = mid;
    }
    double R = 0.5 * (lo + hi);

    // interior grid clustered at both ends
    std::vector<double> x(opt.nr + 1);
    for (int i = 0; i <= opt.nr; ++i) x[i] = 0.5 * (1 - std::cos(pi * i / opt.nr));
    x[opt.nr] = 1;

    // Newton on R using the integration to R itself; the last pass also samples the grid
    std::vector<State> st;
    bool converged = false;
    for (int it = 0; it < 30; ++it) {
        std::vector<double> times(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) times[i] = R * x[i];
        times.back() = R;
        st = march(sys, times, ode_tol);
        double yR = st.back()[0], dyR = st.back()[1] / (R * R);
        double step = yR / dyR;
        R -= step;
        if (std::fabs(step) < 1e-14 * R || std::fabs(yR) < 1e-15) {
            converged = true;
            for (std::size_t i = 0; i < x.size(); ++i) times[i] = R * x[i];
            times.back() = R;
            st = march(sys, times, ode_tol);
            break;
        }
    }
    if (!converged) throw std::runtime_error("solve_base_state: support radius did not converge");

    const double p = 2 / (mu + 0.5);
    const double sy = std::pow(R, p), sdy = std::pow(R, p + 1);
    RadialState out;
    out.mu = mu;
    out.coefficient = c;
    out.tol = opt.tol;
    out.nr = opt.nr;
    out.r_out = opt.r_out;
    out.mass = -sdy * st.back()[1] / (R * R);
    out.e0 = -out.mass;
    for (int i = 0; i <= opt.nr; ++i) {
        double ri = x[i];
        double y = (i == opt.nr) ? 0.0 : sy * st[i][0];
        double dy = (i == 0) ? 0.0 : sdy * st[i][1] / (R * x[i] * R * x[i]);
        double rho = y > 0 ? c * std::pow(y, n) : 0.0;
        out.r.push_back(ri);
        out.rho0.push_back(rho);
        out.u0.push_back(out.e0 - y);
        out.u0_prime.push_back(-dy);
        out.u0_second.push_back(i == 0 ? 4 * pi * rho / 3 : 4 * pi * rho - 2 * (-dy) / ri);
    }
    int n_ext = std::max(opt.nr / 4, 8);
    for (int k = 1; k <= n_ext; ++k) {
        double ri = 1 + (opt.r_out - 1) * k / n_ext;
        out.r.push_back(ri);
        out.rho0.push_back(0.0);
        out.u0.push_back(-out.mass / ri);
        out.u0_prime.push_back(out.mass / (ri * ri));
        out.u0_second.push_back(-2 * out.mass / (ri * ri * ri));
    }
    out.finalize();
    if (mu < 1)
        out.warnings.push_back("mu < 1: rho0' is unbounded at the free boundary; "
                               "the integral identities are the operative checks");

    auto rep = check_invariants(out);
    if (!(rep.boundary_error <= 1e-8) || !(rep.integral_identity <= 1e-8) || !rep.rho_monotone
        || !rep.u_monotone || !(rep.self_consistency <= 1e-7))
        throw std::runtime_error("solve_base_state: invariants failed after solve");
    return out;
}

InvariantReport check_invariants(const RadialState& s)
{
    InvariantReport rep;
    rep.boundary_error = std::fabs(s.u0_at(1.0) - s.e0);

    // cumulative 8-point Gauss on each grid interval
    auto g = numerics::gauss_legendre(8);
    double cum = 0, worst = 0;
    for (int i = 1; i <= s.nr; ++i) {
        double a = s.r[i - 1], b = s.r[i];
        double h = (b - a) / 2, m = (a + b) / 2;
        for (std::size_t k = 0; k < g.size(); ++k) {
            double t = m + h * g.nodes[k];
            cum += h * g.weights[k] * t * t * s.rho0_at(t);
        }
        double expect = 4 * pi * cum / (b * b);
        worst = std::max(worst, std::fabs(s.u0_prime[i] - expect) / expect);
    }
    rep.integral_identity = worst;

    profiles::DensityIntegrals d(profiles::PolytropeProfile(s.mu, s.e0), profiles::RotationProfile::even_gaussian());
    double sc = 0;
    for (int i = 0; i <= s.nr; ++i) sc = std::max(sc, std::fabs(s.rho0[i] - d.h(0, s.r[i], s.u0[i])));
    rep.self_consistency = sc / s.rho0[0];

    double one_sided = (s.u0_prime[1] - s.u0_prime[0]) / s.r[1];
    double expect = 4 * pi * s.rho0[0] / 3;
    rep.center_curvature = std::fabs(one_sided - expect) / expect;

    rep.rho_monotone = s.rho0[0] > 0;
    rep.u_monotone = true;
    for (std::size_t i = 1; i < s.r.size(); ++i) {
        if (s.rho0[i] > s.rho0[i - 1]) rep.rho_monotone = false;
        if (!(s.u0[i] > s.u0[i - 1])) rep.u_monotone = false;
    }
    return rep;
}

}  // namespace axistar::spherical
