// Acceptance suite: one line per criterion, exit status 0 iff all pass.

#include <Eigen/Dense>

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "axistar/model.hpp"
#include "axistar/operator.hpp"
#include "axistar/profiles.hpp"
#include "axistar/spherical.hpp"
#include "cli.hpp"
#include "fields.hpp"
#include "oracles.hpp"

using namespace axistar;
namespace fs = std::filesystem;
using geometry::Vec3;

namespace {

// criterion 1
constexpr double kBoundaryTol = 1e-8;
constexpr double kIdentityTol = 1e-8;
constexpr double kCurvatureTol = 1e-4;
constexpr double kSelfConsistencyTol = 1e-7;
constexpr double kTime1 = 5;
// criterion 2
constexpr double kClosedFormTol = 1e-8;
constexpr int kClosedFormPoints = 50;
constexpr double kTime2 = 1;
// criterion 3
constexpr double kDerivativeTol = 1e-4;
constexpr double kFdStep = 1e-5;
constexpr double kTime3 = 30;
// criterion 4
constexpr double kSectorSlack = 0.02;
constexpr double kSigmaMin = 1e-3;
constexpr double kVolterraTol = 1e-8;
constexpr double kTime4 = 10;
// criterion 5
constexpr double kBackSubstitutionTol = 1e-8;
constexpr double kTime5 = 10;
// criterion 6
constexpr double kGammaMax = 4;
constexpr int kSteps = 8;
constexpr int kMaxNewton = 8;
constexpr double kBaseReproduction = 1e-6;
constexpr double kSlopeMin = 0.9;
constexpr double kSmallGammaTol = 1e-16;  // zeta ~ 1e-13 at gamma = 2^-8
constexpr double kTime6 = 300;
// criterion 7
constexpr double kPoissonTol = 1e-4;
constexpr double kQuadrupoleMin = 1e-8;
constexpr double kQuadrupoleStatic = 1e-10;
constexpr double kCurrentZero = 1e-12;
constexpr double kMomentumDrift = 1e-10;
constexpr double kFDrift = 1e-6;
constexpr double kOrderRatioLo = 3.5, kOrderRatioHi = 4.5;  // E drift ratio on doubling dt
constexpr int kOrbits = 16;
constexpr double kOrbitTime = 4;
constexpr double kTime7 = 60;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string format(const char* f, ...)
{
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

op::OperatorContext make_context(double mu, const profiles::RotationProfile& psi)
{
    auto base = spherical::solve_base_state(mu);
    profiles::DensityIntegrals prof(profiles::PolytropeProfile(mu, base.e0), psi);
    return op::OperatorContext(base, prof);
}

Outcome base_state_suite()
{
    auto t0 = Clock::now();
    double b = 0, id = 0, cu = 0, sc = 0;
    bool mono = true;
    for (double mu : {0.5, 1.0, 2.0}) {
        auto s = spherical::solve_base_state(mu);
        auto r = spherical::check_invariants(s);
        b = std::max(b, r.boundary_error);
        id = std::max(id, r.integral_identity);
        cu = std::max(cu, r.center_curvature);
        sc = std::max(sc, r.self_consistency);
        mono = mono && r.rho_monotone;
    }
    double t = seconds_since(t0);
    bool pass = b <= kBoundaryTol && id <= kIdentityTol && cu <= kCurvatureTol && sc <= kSelfConsistencyTol && mono &&
                t < kTime1;
    return {pass, format("mu in {0.5,1,2}: |U0(1)-E0| %.1e, identity %.1e, U0''(0) %.1e, rho0=h %.1e, monotone %s; "
                         "%.2f s",
                         b, id, cu, sc, mono ? "yes" : "no", t)};
}

Outcome closed_form_h()
{
    auto t0 = Clock::now();
    const double e0 = -1.0;
    double worst = 0;
    for (double mu : {-0.25, 0.5, 1.0, 2.5}) {
        profiles::DensityIntegrals d(profiles::PolytropeProfile(mu, e0), profiles::RotationProfile::even_gaussian());
        for (int k = 0; k < kClosedFormPoints; ++k) {
            double u = e0 - 3.0 * (k + 0.5) / kClosedFormPoints;
            double nested = oracle::h(mu, e0, [](double) { return 1.0; }, 0.0, 0.5, u);
            double closed = d.coefficient() * std::pow(e0 - u, mu + 1.5);
            worst = std::max(worst, std::fabs(nested - closed) / closed);
        }
    }
    double t = seconds_since(t0);
    return {worst <= kClosedFormTol && t < kTime2,
            format("200 points, max relative error %.1e (tol %.0e); %.2f s", worst, kClosedFormTol, t)};
}

Outcome derivative_check()
{
    auto t0 = Clock::now();
    const auto ctx = make_context(1.0, profiles::RotationProfile::skewed_rational());
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> g(0.0, 2.0);
    double worst = 0;
    for (int trial = 0; trial < 5; ++trial) {
        double gamma = g(rng);
        auto z = testfields::random_field(rng, 0.08, ctx.grid());
        auto xi = testfields::random_field(rng, 1.0, ctx.grid());
        auto d = op::apply_dT(ctx, gamma, z, xi);
        auto p = op::apply_T(ctx, gamma, z.axpy(kFdStep, xi));
        auto m = op::apply_T(ctx, gamma, z.axpy(-kFdStep, xi));
        std::vector<double> diff(d.moments.size());
        for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = (p.moments[i] - m.moments[i]) / (2 * kFdStep) - d.moments[i];
        worst = std::max(worst, op::y_norm(ctx.grid(), diff) / d.y_norm);
    }
    double t = seconds_since(t0);
    return {worst <= kDerivativeTol && t < kTime3,
            format("5 random (gamma, zeta, xi): max relative Y-norm gap %.1e (tol %.0e); %.2f s", worst,
                   kDerivativeTol, t)};
}

Outcome sector_bounds()
{
    auto t0 = Clock::now();
    double worst_excess = -INFINITY, min_sigma = INFINITY, volterra = 0;
    std::string norms;
    std::mt19937_64 rng(99);
    for (double mu : {0.5, 1.0, 2.0}) {
        auto base = spherical::solve_base_state(mu);
        geometry::GridSpec grid;
        for (const auto& s : op::sector_reports(base, grid)) {
            min_sigma = std::min(min_sigma, s.sigma_min);
            if (s.l >= 2) worst_excess = std::max(worst_excess, s.norm_inf - s.bound);
            if (mu == 1.0 && s.l >= 2) norms += format(" K%d=%.3f", s.l, s.norm_inf);
        }
        for (int n = 0; n < 3; ++n) {
            auto xi = testfields::random_field(rng, 1.0, grid);
            auto general = op::apply_K(base, xi);
            auto v = op::apply_K_volterra(base, xi);
            double scale = 0;
            for (int k = 1; k <= grid.nr; ++k) scale = std::max(scale, std::fabs(v[k - 1]));
            for (int k = 1; k <= grid.nr; ++k)
                volterra = std::max(volterra, std::fabs(general.coeff(0, k) - v[k - 1]) / scale);
        }
    }
    double t = seconds_since(t0);
    bool pass = worst_excess <= kSectorSlack && min_sigma > kSigmaMin && volterra <= kVolterraTol && t < kTime4;
    return {pass, format("mu=1:%s; max(||K_l|| - 3/(2l+1)) %.3f (<= %.2f); min sigma(id-K_l) %.4f; Volterra gap "
                         "%.1e; %.2f s",
                         norms.c_str(), worst_excess, kSectorSlack, min_sigma, volterra, t)};
}

Outcome isomorphism()
{
    auto t0 = Clock::now();
    const auto ctx = make_context(1.0, profiles::RotationProfile::skewed_rational());
    geometry::DeformationField zero(ctx.grid());
    auto J = op::assemble_jacobian(ctx, 0.0, zero);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(J.matrix);
    std::mt19937_64 rng(31);
    double worst = 0;
    for (int n = 0; n < 10; ++n) {
        auto f = testfields::random_field(rng, 1.0, ctx.grid());
        Eigen::VectorXd g(ctx.unknowns());
        for (int s = 0; s < ctx.sectors(); ++s)
            for (int k = 1; k <= ctx.nr(); ++k) g[s * ctx.nr() + k - 1] = ctx.radius(k) * f.coeff(s, k);
        Eigen::VectorXd x = lu.solve(g);
        geometry::DeformationField xi(ctx.grid(), std::vector<double>(x.data(), x.data() + x.size()));
        auto back = op::apply_dT(ctx, 0.0, zero, xi);
        std::vector<double> gv(g.data(), g.data() + g.size()), diff(gv.size());
        for (std::size_t i = 0; i < gv.size(); ++i) diff[i] = back.moments[i] - gv[i];
        worst = std::max(worst, op::y_norm(ctx.grid(), diff) / op::y_norm(ctx.grid(), gv));
    }
    double t = seconds_since(t0);
    return {worst <= kBackSubstitutionTol && t < kTime5,
            format("10 random g: max relative residual of L0 xi = g %.1e (tol %.0e); %.2f s", worst,
                   kBackSubstitutionTol, t)};
}

struct Family {
    std::unique_ptr<op::OperatorContext> ctx;
    op::ContinuationResult run;
};

Family& skewed_family()
{
    static Family fam;
    return fam;
}

Outcome continuation_suite()
{
    auto t0 = Clock::now();
    auto& fam = skewed_family();
    fam.ctx = std::make_unique<op::OperatorContext>(make_context(1.0, profiles::RotationProfile::skewed_rational()));
    const auto& ctx = *fam.ctx;
    fam.run = op::continue_in_gamma(ctx, kGammaMax, kSteps);
    const auto& run = fam.run;

    int max_it = 0;
    bool monotone = true;
    for (std::size_t k = 0; k < run.steps.size(); ++k) {
        max_it = std::max(max_it, run.steps[k].newton.iterations);
        if (k > 0 && !(run.steps[k].x_norm > run.steps[k - 1].x_norm)) monotone = false;
    }

    auto st0 = model::assemble(ctx, 0.0, run.steps.front().field);
    double drho = 0, du = 0;
    const auto& rho = *st0.density;
    for (int i = 0; i < rho.radial_count(); ++i)
        for (int j = 0; j < rho.polar_count(); ++j) {
            double r = rho.panels().node(i), c = rho.cos_node(j);
            drho = std::max(drho, std::fabs(rho.value(i, j) - ctx.base().rho0_at(r)));
            du = std::max(du, std::fabs(st0.u({r * std::sqrt(1 - c * c), 0, r * c}) - ctx.base().u0_at(r)));
        }

    std::vector<double> gammas{0.0};
    for (int k = 8; k >= 3; --k) gammas.push_back(std::ldexp(1.0, -k));
    op::NewtonOptions tight;
    tight.tol = kSmallGammaTol;
    auto small = op::continue_along(ctx, gammas, tight);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    bool small_ok = !small.truncated && small.steps.size() == gammas.size();
    for (std::size_t k = 1; small_ok && k < small.steps.size(); ++k) {
        if (!(small.steps[k].x_norm > 0)) {
            small_ok = false;
            break;
        }
        double x = std::log(small.steps[k].gamma), y = std::log(small.steps[k].x_norm);
        sx += x, sy += y, sxx += x * x, sxy += x * y, ++n;
    }
    double slope = small_ok ? (n * sxy - sx * sy) / (n * sxx - sx * sx) : NAN;

    double t = seconds_since(t0);
    bool pass = run.gamma_reached() > 0 && max_it <= kMaxNewton && monotone && drho <= kBaseReproduction &&
                du <= kBaseReproduction && small_ok && slope >= kSlopeMin && t < kTime6;
    return {pass, format("skewed psi, %d steps to %.1f: reached %.3g%s, max Newton its %d, ||zeta||_X monotone %s "
                         "(%.3g at the end); gamma=0 state |rho-rho0| %.1e |U-U0| %.1e; log-log slope on 2^-8..2^-3 "
                         "%.3f; %.1f s",
                         kSteps, kGammaMax, run.gamma_reached(), run.truncated ? " (truncated)" : "", max_it,
                         monotone ? "yes" : "no", run.steps.back().x_norm, drho, du, slope, t)};
}

Outcome physics_suite()
{
    auto& fam = skewed_family();
    if (!fam.ctx || fam.run.steps.empty()) return {false, "no continuation family"};
    const auto& ctx = *fam.ctx;
    std::vector<std::size_t> picks{0, fam.run.steps.size() / 2, fam.run.steps.size() - 1};

    bool pass = true;
    std::string lines;
    double slowest = 0;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uni(-0.6, 0.6);
    for (std::size_t idx : picks) {
        auto t0 = Clock::now();
        const auto& step = fam.run.steps[idx];
        auto st = model::assemble(ctx, step.gamma, step.field);
        auto pr = model::poisson_residual(st);
        double margin = model::exterior_margin(st);
        double q = st.sphericity();
        bool q_ok = step.gamma == 0 ? q <= kQuadrupoleStatic : q >= kQuadrupoleMin;

        auto cf = model::velocity_moments(st);
        double jmax = cf.max_magnitude(), dir_err = 0, axis = 0;
        for (int n = 0; n < 50; ++n) {
            Vec3 x{uni(rng), uni(rng), uni(rng)};
            auto j = model::current_vector(st, x);
            double r = std::hypot(x[0], x[1]), jn = std::sqrt(j[0] * j[0] + j[1] * j[1] + j[2] * j[2]);
            dir_err = std::max({dir_err, std::fabs(j[0] + jn * x[1] / r), std::fabs(j[1] - jn * x[0] / r),
                                std::fabs(j[2])});
        }
        for (double z : {-0.8, 0.0, 0.5}) {
            auto j = model::current_vector(st, {0, 0, z});
            axis = std::max({axis, std::fabs(j[0]), std::fabs(j[1]),
                             st.profiles->current(st.gamma, 0.0, st.u({0, 0, z}))});
        }
        bool j_ok = (step.gamma == 0 ? jmax <= kCurrentZero : jmax > 0) && dir_err <= 1e-14 && axis == 0;

        auto fine = model::stationarity_check(st, kOrbits, kOrbitTime);
        auto coarse = model::stationarity_check(st, kOrbits, kOrbitTime, 2 * fine.dt);
        auto spec_dt = model::stationarity_check(st, kOrbits, kOrbitTime, 1e-3 / std::sqrt(st.mass));
        double ratio = coarse.max_energy / fine.max_energy;
        bool orbit_ok = fine.escaped == 0 && fine.max_momentum <= kMomentumDrift &&
                        coarse.max_momentum <= kMomentumDrift && ratio >= kOrderRatioLo && ratio <= kOrderRatioHi &&
                        fine.max_f <= kFDrift;
        double t = seconds_since(t0);
        slowest = std::max(slowest, t);
        bool ok = pr.max_residual <= kPoissonTol && margin > 0 && q_ok && j_ok && orbit_ok && !st.flagged && t < kTime7;
        pass = pass && ok;
        lines += format("\n      gamma=%.2f: Poisson %.1e, min(U-E0) %.2e, q2/q0 %.2e, max j %.2e, P drift %.0e, E "
                        "ratio %.2f, f drift %.1e (dt=%.2e; at 1e-3 M^-1/2: %.1e)%s",
                        step.gamma, pr.max_residual, margin, q, jmax, fine.max_momentum, ratio, fine.max_f, fine.dt,
                        spec_dt.max_f, ok ? "" : "  <-- fails");
    }

    auto t0 = Clock::now();
    auto even_ctx = make_context(1.0, profiles::RotationProfile::even_gaussian());
    op::NewtonOptions opt;
    auto zeta = op::newton_solve(even_ctx, 1.0, geometry::DeformationField(even_ctx.grid()), opt);
    auto even = model::assemble(even_ctx, 1.0, zeta);
    double jeven = model::velocity_moments(even).max_magnitude();
    double q_even = even.sphericity();
    bool even_ok = jeven <= kCurrentZero && q_even >= kQuadrupoleMin && !even.flagged;
    pass = pass && even_ok;
    lines += format("\n      even psi, gamma=1: max j %.1e, q2/q0 %.2e, flagged %s; %.2f s", jeven, q_even,
                    even.flagged ? "yes" : "no", seconds_since(t0));
    return {pass, format("3 skewed states + 1 even state, slowest %.1f s (< %.0f s)", slowest, kTime7) + lines};
}

std::map<std::string, std::string> snapshot(const fs::path& dir)
{
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::ifstream in(e.path(), std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        files[fs::relative(e.path(), dir).string()] = ss.str();
    }
    return files;
}

Outcome determinism()
{
    auto t0 = Clock::now();
    fs::path dir = fs::temp_directory_path() / "vp_axistar_acceptance_determinism";
    auto once = [&](const char* threads) {
        fs::remove_all(dir);
        setenv("VP_AXISTAR_THREADS", threads, 1);
        std::string out = dir.string();
        const char* cont[] = {"vp_axistar", "continue", "--gamma-max", "1", "--gamma-steps", "2", "--seed", "7",
                              "--out", out.c_str()};
        int a = cli::run(10, cont);
        std::string step = (dir / "step_002").string();
        const char* plots[] = {"vp_axistar", "export-plots", step.c_str()};
        int b = cli::run(3, plots);
        const char* diag[] = {"vp_axistar", "diagnose", step.c_str()};
        int c = cli::run(3, diag);
        return std::make_pair(a == 0 && b == 0 && c == 0, snapshot(dir));
    };
    // the CLI reports on stdout/stderr; keep the acceptance output to one line per criterion
    std::ostringstream sink;
    auto* out_buf = std::cout.rdbuf(sink.rdbuf());
    auto* err_buf = std::cerr.rdbuf(sink.rdbuf());
    auto first = once("3");
    auto second = once("1");
    std::cout.rdbuf(out_buf);
    std::cerr.rdbuf(err_buf);
    unsetenv("VP_AXISTAR_THREADS");
    fs::remove_all(dir);
    int differing = 0;
    for (const auto& [name, bytes] : first.second) {
        auto it = second.second.find(name);
        if (it == second.second.end() || it->second != bytes) ++differing;
    }
    bool pass = first.first && second.first && differing == 0 && first.second.size() == second.second.size() &&
                !first.second.empty();
    return {pass, format("continue + export-plots + diagnose run twice (3 threads, then 1): %zu files, %d differ; "
                         "%.1f s",
                         first.second.size(), differing, seconds_since(t0))};
}

}  // namespace

int main()
{
    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
    };
    std::vector<Criterion> criteria = {
        {"1 base-state suite", base_state_suite},
        {"2 closed-form h oracle", closed_form_h},
        {"3 derivative correctness", derivative_check},
        {"4 sector bounds", sector_bounds},
        {"5 isomorphism realization", isomorphism},
        {"6 continuation suite", continuation_suite},
        {"7 physics suite", physics_suite},
        {"8 determinism", determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::printf("[%s] %s: %s\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
