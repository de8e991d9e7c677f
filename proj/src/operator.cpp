#include "axistar/operator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "axistar/parallel.hpp"

namespace axistar::op {

using std::numbers::pi;

namespace {

void require_grid(const OperatorContext& ctx, const DeformationField& f)
{
    const GridSpec& a = ctx.grid();
    const GridSpec& b = f.spec();
    if (a.L != b.L || a.nr != b.nr || a.r_max != b.r_max)
        throw std::invalid_argument("deformation field grid does not match the operator grid");
}

}  // namespace

OperatorContext::OperatorContext(spherical::RadialState base, profiles::DensityIntegrals profiles, Discretization disc)
    : base_(std::move(base)), profiles_(std::move(profiles)), disc_(disc)
{
    if (disc_.polar_nodes < 4 || disc_.polar_nodes % 2)
        throw std::invalid_argument("Discretization: polar_nodes must be even and at least 4");
    if (disc_.grid.L > disc_.polar_nodes - 2)
        throw std::invalid_argument("Discretization: L exceeds what the polar grid resolves");
    if (std::fabs(profiles_.polytrope().e0 - base_.e0) > 1e-12 * std::max(1.0, std::fabs(base_.e0)))
        throw std::invalid_argument("OperatorContext: profile cutoff energy differs from the base state's E0");
    panels_ = field::RadialPanels::standard();
    polar_ = std::make_shared<const numerics::LegendreBasis>(disc_.polar_nodes - 2, disc_.polar_nodes, true);
    sample_polar_ = std::make_shared<const numerics::LegendreBasis>(disc_.grid.L, disc_.polar_nodes, true);
    DeformationField zero(disc_.grid);
    auto rho0 = field::density_from_state(0.0, zero, base_, profiles_, panels_, polar_);
    v0_ = std::make_shared<const field::PotentialField>(rho0);
    const int H = half_count();
    defect_.assign(static_cast<std::size_t>(nr()) * H, 0.0);
    double u00 = base_.u0_at(0.0), v00 = v0_->value({0, 0, 0});
    for (int k = 1; k <= nr(); ++k)
        for (int j = 0; j < H; ++j)
            defect_[(k - 1) * H + j] = (base_.u0_at(radius(k)) - u00) - (v0_->value(sample_point(k, j)) - v00);
}

Vec3 OperatorContext::sample_point(int k, int j) const
{
    double r = radius(k), c = cos_node(j);
    return {r * std::sqrt(std::max(0.0, 1 - c * c)), 0.0, r * c};
}

double y_norm(const GridSpec& grid, const std::vector<double>& moments)
{
    return geometry::y_norm_estimate(DeformationField(grid, moments));
}

namespace {

OperatorOutput finish(const OperatorContext& ctx, std::vector<double> values)
{
    OperatorOutput out;
    const int nr = ctx.nr(), H = ctx.half_count(), S = ctx.sectors();
    out.L = ctx.grid().L;
    out.nr = nr;
    for (int k = 1; k <= nr; ++k) out.radii.push_back(ctx.radius(k));
    for (int j = 0; j < H; ++j) out.cosines.push_back(ctx.cos_node(j));
    out.moments.assign(static_cast<std::size_t>(S) * nr, 0.0);
    for (int k = 0; k < nr; ++k) {
        auto m = ctx.sample_polar().forward_half(&values[k * H]);
        for (int s = 0; s < S; ++s) out.moments[s * nr + k] = m[s];
    }
    out.values = std::move(values);
    out.y_norm = y_norm(ctx.grid(), out.moments);
    return out;
}

// W(g(x)) - W(0) - dV/dr(g(x)) xi(x) for sigma = a xi at the density nodes
std::vector<double> linear_response(const OperatorContext& ctx, const StateEval& st, const std::vector<double>& xi_nodes,
                                    const std::vector<double>& xi_samples)
{
    std::vector<double> sigma(st.a.size());
    for (std::size_t i = 0; i < sigma.size(); ++i) sigma[i] = st.a[i] * xi_nodes[i];
    field::AxiField sig(ctx.panels(), ctx.polar(), std::move(sigma));
    std::vector<double> w(st.images.size());
    st.probe->values(sig.moments(), w.data());
    double w0 = st.probe->origin(sig.moments());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = (w[i] - w0) - st.vr_image[i] * xi_samples[i];
    return w;
}

// U0(t + d) - U0(t), by quadrature of U0' when d is small
double u0_difference(const spherical::RadialState& b, double t, double d)
{
    double s = t + d;
    if (std::fabs(d) >= 1e-4) return b.u0_at(s) - b.u0_at(t);
    static const auto q = numerics::gauss_legendre(4, 0.0, 1.0);
    double acc = 0;
    for (std::size_t g = 0; g < q.size(); ++g) acc += q.weights[g] * b.u0_prime_at(t + d * q.nodes[g]);
    return d * acc;
}

// h0(u) - h0(u0) with du = u0 - u
double h0_difference(const profiles::DensityIntegrals& p, double u, double u0, double du)
{
    double e0 = p.polytrope().e0;
    double d = e0 - u, d0 = e0 - u0;
    if (d > 0 && d0 > 0) {
        double n = p.polytrope().density_exponent();
        return p.coefficient() * std::pow(d0, n) * std::expm1(n * std::log1p(du / d0));
    }
    return p.h0(u) - p.h0(u0);
}

// V0((r + d) xhat) - V0(r xhat)
double v0_difference(const field::PotentialField& v0, double r, double d, double c)
{
    double rho = r + d;
    if (std::fabs(d) >= 1e-4) return v0.meridional(rho, c, 0).v - v0.meridional(r, c, 0).v;
    static const auto q = numerics::gauss_legendre(4, 0.0, 1.0);
    double acc = 0;
    for (std::size_t g = 0; g < q.size(); ++g) acc += q.weights[g] * v0.meridional(r + d * q.nodes[g], c, 1).vr;
    return d * acc;
}

}  // namespace

StateEval evaluate_state(const OperatorContext& ctx, double gamma, const DeformationField& field, bool with_derivative)
{
    require_grid(ctx, field);
    if (!field.admissible()) throw geometry::GeometryError("deformation field is not admissible");
    StateEval st;
    st.gamma = gamma;
    st.field = field;
    const auto& P = *ctx.panels();
    const int n = P.node_count(), H = ctx.half_count();
    const auto& base = ctx.base();
    const auto& prof = ctx.profiles();
    st.t.assign(static_cast<std::size_t>(n) * H, 0.0);
    if (with_derivative) st.a.assign(st.t.size(), 0.0);
    std::vector<double> rho(st.t.size(), 0.0), drho(st.t.size(), 0.0);
    parallel_for(n, [&](int i) {
        double s = P.node(i);
        double u0 = base.u0_at(s);
        for (int j = 0; j < H; ++j) {
            double c = ctx.cos_node(j);
            double t = geometry::g_invert_radius(field, c, s);
            st.t[i * H + j] = t;
            if (t >= 1 && s >= 1) continue;
            double u = base.u0_at(t);
            double rc = s * std::sqrt(std::max(0.0, 1 - c * c));
            double z, dz;
            field.along_ray(c, t, &z, &dz);  // s - t = zeta(t yhat), more accurate than the difference
            drho[i * H + j] = prof.h_excess(gamma, rc, u) + h0_difference(prof, u, u0, u0_difference(base, t, z));
            if (t >= 1) continue;
            rho[i * H + j] = prof.h(gamma, rc, u);
            if (with_derivative) st.a[i * H + j] = prof.h_du(gamma, rc, u) * base.u0_prime_at(t) / (1 + dz);
        }
    });
    st.density = std::make_shared<const field::AxiField>(ctx.panels(), ctx.polar(), std::move(rho));
    st.potential = std::make_shared<const field::PotentialField>(*st.density);
    field::AxiField delta(ctx.panels(), ctx.polar(), std::move(drho));
    st.delta_potential = std::make_shared<const field::PotentialField>(delta);
    const int nr = ctx.nr();
    const std::size_t ns = static_cast<std::size_t>(nr) * H;
    st.images.resize(ns);
    st.v_image.resize(ns);
    st.vr_image.resize(ns);
    st.dv_image.resize(ns);
    st.v0_shift.resize(ns);
    const double dv0 = st.delta_potential->value({0, 0, 0});
    for (int k = 1; k <= nr; ++k)
        for (int j = 0; j < H; ++j) {
            int idx = (k - 1) * H + j;
            double c = ctx.cos_node(j);
            // |g(x)| = r + zeta(x) along the ray; keeps V0(g(x)) - V0(x) exactly 0 at zeta = 0
            double r = ctx.radius(k), z;
            field.along_ray(c, r, &z, nullptr);
            double rho_img = r + z;
            Vec3 x = ctx.sample_point(k, j);
            Vec3 img{x[0] * (rho_img / r), 0.0, x[2] * (rho_img / r)};
            st.images[idx] = img;
            auto m = st.potential->meridional(rho_img, c, 1);
            st.v_image[idx] = m.v;
            st.vr_image[idx] = m.vr;
            st.dv_image[idx] = st.delta_potential->meridional(rho_img, c, 0).v - dv0;
            st.v0_shift[idx] = v0_difference(ctx.base_potential(), r, z, c);
        }
    st.v_origin = st.potential->value({0, 0, 0});
    if (with_derivative)
        st.probe = std::make_shared<const field::PotentialField::Probe>(ctx.panels(), st.density->sectors(), st.images);
    return st;
}

OperatorOutput apply_T(const OperatorContext& ctx, const StateEval& st, bool raw)
{
    const int nr = ctx.nr(), H = ctx.half_count();
    const double u00 = ctx.base().u0_at(0.0);
    std::vector<double> v(static_cast<std::size_t>(nr) * H);
    const bool corrected = !raw && ctx.disc().defect_correction;
    for (int k = 1; k <= nr; ++k) {
        double base_term = ctx.base().u0_at(ctx.radius(k)) - u00;
        for (int j = 0; j < H; ++j) {
            int idx = (k - 1) * H + j;
            v[idx] = corrected ? -st.dv_image[idx] - st.v0_shift[idx] : base_term - (st.v_image[idx] - st.v_origin);
        }
    }
    OperatorOutput out = finish(ctx, std::move(v));
    // g(0) = 0, so both differences vanish identically there
    out.origin = (u00 - u00) - (st.v_origin - st.v_origin);
    return out;
}

OperatorOutput apply_T(const OperatorContext& ctx, double gamma, const DeformationField& field, bool raw)
{
    return apply_T(ctx, evaluate_state(ctx, gamma, field, false), raw);
}

OperatorOutput apply_dT(const OperatorContext& ctx, const StateEval& st, const DeformationField& xi)
{
    require_grid(ctx, xi);
    if (!st.probe) throw std::invalid_argument("apply_dT: state evaluated without derivative data");
    const int n = ctx.panels()->node_count(), H = ctx.half_count(), nr = ctx.nr();
    std::vector<double> xn(static_cast<std::size_t>(n) * H, 0.0), xs(static_cast<std::size_t>(nr) * H, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < H; ++j) {
            double t = st.t[i * H + j];
            if (t < 1) xi.along_ray(ctx.cos_node(j), t, &xn[i * H + j], nullptr);
        }
    for (int k = 1; k <= nr; ++k)
        for (int j = 0; j < H; ++j) xi.along_ray(ctx.cos_node(j), ctx.radius(k), &xs[(k - 1) * H + j], nullptr);
    OperatorOutput out = finish(ctx, linear_response(ctx, st, xn, xs));
    out.origin = 0;
    return out;
}

OperatorOutput apply_dT(const OperatorContext& ctx, double gamma, const DeformationField& field,
                        const DeformationField& xi)
{
    return apply_dT(ctx, evaluate_state(ctx, gamma, field, true), xi);
}

JacobianMatrix assemble_jacobian(const OperatorContext& ctx, const StateEval& st)
{
    if (!st.probe) throw std::invalid_argument("assemble_jacobian: state evaluated without derivative data");
    const int n = ctx.panels()->node_count(), H = ctx.half_count(), nr = ctx.nr(), S = ctx.sectors();
    const auto& basis = *st.field.basis();
    const int nk = basis.size();
    // cardinal spline weights at the preimage radii
    std::vector<double> cw(static_cast<std::size_t>(n) * H * nk, 0.0);
    for (int idx = 0; idx < n * H; ++idx)
        if (st.t[idx] < 1) basis.weights(st.t[idx], &cw[static_cast<std::size_t>(idx) * nk]);
    JacobianMatrix J;
    J.L = ctx.grid().L;
    J.nr = nr;
    J.matrix.setZero(S * nr, S * nr);
    parallel_for(S * nr, [&](int col) {
        int sp = col / nr, m = col % nr + 1;
        std::vector<double> xn(static_cast<std::size_t>(n) * H, 0.0), xs(static_cast<std::size_t>(nr) * H, 0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < H; ++j) {
                int idx = i * H + j;
                xn[idx] = cw[static_cast<std::size_t>(idx) * nk + m] * ctx.polar()->P(sp, ctx.polar()->half_index(j));
            }
        for (int j = 0; j < H; ++j) xs[(m - 1) * H + j] = ctx.polar()->P(sp, ctx.polar()->half_index(j));
        auto v = linear_response(ctx, st, xn, xs);
        for (int k = 0; k < nr; ++k) {
            auto mom = ctx.sample_polar().forward_half(&v[k * H]);
            for (int s = 0; s < S; ++s) J.matrix(s * nr + k, col) = mom[s];
        }
    });
    return J;
}

JacobianMatrix assemble_jacobian(const OperatorContext& ctx, double gamma, const DeformationField& field)
{
    return assemble_jacobian(ctx, evaluate_state(ctx, gamma, field, true));
}

// ---- K on the sectors ----

namespace {

// rho0'(s) / (1-s)^beta with beta = mu + 1/2, for s < 1
double rho0_prime_reduced(const spherical::RadialState& b, double s)
{
    double y = std::max(0.0, b.e0 - b.u0_at(s));
    double n = b.density_exponent();
    return -b.coefficient * n * std::pow(y / (1 - s), n - 1) * b.u0_prime_at(s);
}

double kernel(int l, double r, double s)
{
    if (l == 0) return s < r ? 1 / r - 1 / s : 0.0;
    return s < r ? std::pow(s, l) / std::pow(r, l + 1) : std::pow(r, l) / std::pow(s, l + 1);
}

}  // namespace

Eigen::MatrixXd k_matrix(const spherical::RadialState& base, const GridSpec& grid, int l)
{
    if (l < 0 || l % 2) throw std::invalid_argument("k_matrix: even degree expected");
    DeformationField proto(grid);
    const auto& basis = *proto.basis();
    const int nr = grid.nr, nk = basis.size();
    const auto gl = numerics::gauss_legendre(10, 0.0, 1.0);
    const double beta = base.density_exponent() - 1;
    const auto gj = numerics::gauss_jacobi(10, 0.0, beta);
    std::vector<double> inner;
    for (double x : basis.knots())
        if (x > 0 && x < 1) inner.push_back(x);
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nr, nr);
    std::vector<double> w(nk);
    for (int k = 1; k <= nr; ++k) {
        double r = grid.r_max * k / nr;
        std::vector<double> br{0.0, 1.0};
        br.insert(br.end(), inner.begin(), inner.end());
        if (r < 1) br.push_back(r);
        std::sort(br.begin(), br.end());
        br.erase(std::unique(br.begin(), br.end()), br.end());
        const double pref = -4 * pi / ((2 * l + 1) * base.u0_prime_at(r));
        for (std::size_t p = 0; p + 1 < br.size(); ++p) {
            double a = br[p], b = br[p + 1];
            if (l == 0 && a >= r) break;
            bool last = b >= 1;
            const auto& rule = last ? gj : gl;
            for (std::size_t g = 0; g < rule.size(); ++g) {
                double s = a + (b - a) * rule.nodes[g];
                double wt = (b - a) * rule.weights[g];
                double f = last ? std::pow(b - a, beta) * rho0_prime_reduced(base, s) : base.rho0_prime_at(s);
                f *= pref * kernel(l, r, s) * s * s * wt;
                basis.weights(s, w.data());
                for (int m = 1; m <= nr; ++m) K(k - 1, m - 1) += f * w[m];
            }
        }
    }
    return K;
}

DeformationField apply_K(const spherical::RadialState& base, const DeformationField& xi)
{
    const int nr = xi.nr();
    std::vector<double> out(xi.coefficients().size());
    for (int s = 0; s < xi.sectors(); ++s) {
        Eigen::Map<const Eigen::VectorXd> v(&xi.coefficients()[s * nr], nr);
        Eigen::VectorXd kv = k_matrix(base, xi.spec(), 2 * s) * v;
        for (int k = 0; k < nr; ++k) out[s * nr + k] = kv[k];
    }
    return DeformationField(xi.spec(), std::move(out));
}

std::vector<double> apply_K_volterra(const spherical::RadialState& base, const DeformationField& xi)
{
    const int nr = xi.nr();
    const auto gl = numerics::gauss_legendre(8, 0.0, 1.0);
    const double beta = base.density_exponent() - 1;
    const auto gj = numerics::gauss_jacobi(14, 0.0, beta);
    const auto& knots = xi.knots();
    std::vector<double> out(nr);
    for (int k = 1; k <= nr; ++k) {
        double r = knots[k];
        double top = std::min(r, 1.0);
        double acc = 0;
        for (int p = 0; p < nr && knots[p] < top; ++p) {
            double a = knots[p], b = std::min(knots[p + 1], top);
            bool last = b >= 1;
            const auto& rule = last ? gj : gl;
            for (std::size_t g = 0; g < rule.size(); ++g) {
                double s = a + (b - a) * rule.nodes[g];
                double wt = (b - a) * rule.weights[g];
                double d = last ? std::pow(b - a, beta) * rho0_prime_reduced(base, s) : base.rho0_prime_at(s);
                double z;
                xi.radial(0, s, &z);
                acc += wt * d * s * (s - r) * z;
            }
        }
        out[k - 1] = -4 * pi / (r * base.u0_prime_at(r)) * acc;
    }
    return out;
}

std::vector<SectorReport> sector_reports(const spherical::RadialState& base, const GridSpec& grid)
{
    std::vector<SectorReport> out;
    for (int l = 0; l <= grid.L; l += 2) {
        Eigen::MatrixXd K = k_matrix(base, grid, l);
        SectorReport r;
        r.l = l;
        r.norm_inf = K.cwiseAbs().rowwise().sum().maxCoeff();
        r.norm_2 = Eigen::JacobiSVD<Eigen::MatrixXd>(K).singularValues()(0);
        Eigen::MatrixXd A = Eigen::MatrixXd::Identity(K.rows(), K.cols()) - K;
        auto sv = Eigen::JacobiSVD<Eigen::MatrixXd>(A).singularValues();
        r.sigma_min = sv(sv.size() - 1);
        r.bound = l >= 2 ? 3.0 / (2 * l + 1) : 0.0;
        out.push_back(r);
    }
    return out;
}

// ---- Newton and continuation ----

namespace {

Eigen::VectorXd row_scale(const OperatorContext& ctx)
{
    Eigen::VectorXd d(ctx.unknowns());
    for (int s = 0; s < ctx.sectors(); ++s)
        for (int k = 1; k <= ctx.nr(); ++k) d[s * ctx.nr() + k - 1] = 1 / ctx.base().u0_prime_at(ctx.radius(k));
    return d;
}

std::vector<double> block_conditions(const OperatorContext& ctx, const Eigen::MatrixXd& scaled)
{
    std::vector<double> out;
    const int nr = ctx.nr();
    for (int s = 0; s < ctx.sectors(); ++s) {
        auto sv = Eigen::JacobiSVD<Eigen::MatrixXd>(scaled.block(s * nr, s * nr, nr, nr)).singularValues();
        out.push_back(sv(0) / sv(sv.size() - 1));
    }
    return out;
}

}  // namespace

DeformationField newton_solve(const OperatorContext& ctx, double gamma, const DeformationField& initial,
                              const NewtonOptions& opt, NewtonReport* report)
{
    NewtonReport rep;
    auto fail = [&](const std::string& msg) {
        rep.failure = msg;
        if (report) *report = rep;
        throw NewtonError(msg);
    };
    require_grid(ctx, initial);
    if (!initial.admissible()) fail("initial field is not admissible");
    const Eigen::VectorXd D = row_scale(ctx);
    DeformationField zeta = initial;
    StateEval st = evaluate_state(ctx, gamma, zeta, true);
    OperatorOutput out = apply_T(ctx, st);
    double res = out.y_norm;
    rep.residuals.push_back(res);
    Eigen::MatrixXd scaled;
    while (res > opt.tol) {
        if (rep.iterations >= opt.max_iter) fail("newton: max_iter exceeded");
        scaled = D.asDiagonal() * assemble_jacobian(ctx, st).matrix;
        Eigen::Map<const Eigen::VectorXd> F(out.moments.data(), ctx.unknowns());
        Eigen::VectorXd rhs = -(D.asDiagonal() * F);
        Eigen::VectorXd delta = scaled.partialPivLu().solve(rhs);
        DeformationField dir(ctx.grid(), std::vector<double>(delta.data(), delta.data() + delta.size()));
        double lambda = 1;
        bool accepted = false, any_admissible = false;
        for (int h = 0; h <= opt.max_halvings; ++h, lambda *= 0.5) {
            DeformationField cand = zeta.axpy(lambda, dir);
            if (!cand.admissible()) continue;
            any_admissible = true;
            StateEval st2 = evaluate_state(ctx, gamma, cand, true);
            OperatorOutput out2 = apply_T(ctx, st2);
            if (out2.y_norm < res || out2.y_norm <= opt.tol) {
                zeta = std::move(cand);
                st = std::move(st2);
                out = std::move(out2);
                accepted = true;
                break;
            }
        }
        if (!accepted)
            fail(any_admissible ? "newton: no decreasing step" : "newton: iterate leaves the admissible set");
        res = out.y_norm;
        ++rep.iterations;
        rep.residuals.push_back(res);
    }
    if (scaled.size() == 0) scaled = D.asDiagonal() * assemble_jacobian(ctx, st).matrix;
    rep.sector_condition = block_conditions(ctx, scaled);
    rep.converged = true;
    if (report) *report = rep;
    return zeta;
}

double legendre_tail(const OperatorContext& ctx, const StateEval& st)
{
    const auto& rho = *st.density;
    const int sL = ctx.grid().L / 2;
    double top = 0, tail = 0;
    for (int i = 0; i < rho.radial_count(); ++i) {
        top = std::max(top, std::fabs(rho.moment(0, i)));
        tail = std::max(tail, std::fabs(rho.moment(sL, i)));
    }
    return top > 0 ? tail / top : 0.0;
}

ContinuationResult continue_along(const OperatorContext& ctx, const std::vector<double>& gammas,
                                  const NewtonOptions& opt)
{
    ContinuationResult res;
    for (double g : gammas) {
        const auto& S = res.steps;
        DeformationField pred(ctx.grid());
        if (S.size() >= 2) {
            const auto& a = S[S.size() - 2];
            const auto& b = S.back();
            DeformationField diff = b.field.axpy(-1.0, a.field);
            pred = b.field.axpy((g - b.gamma) / (b.gamma - a.gamma), diff);
            if (!pred.admissible()) pred = b.field;
        } else if (S.size() == 1) {
            pred = S.back().field;
        }
        ContinuationStep step;
        step.gamma = g;
        try {
            step.field = newton_solve(ctx, g, pred, opt, &step.newton);
            step.tail = legendre_tail(ctx, evaluate_state(ctx, g, step.field, false));
        } catch (const std::exception& e) {
            res.truncated = true;
            res.stop_reason = e.what();
            break;
        }
        if (step.tail > kTailLimit) {
            res.truncated = true;
            res.stop_reason = "resolution: Legendre tail of the density exceeds 1e-4";
            break;
        }
        step.residual = step.newton.residuals.back();
        step.x_norm = step.field.x_norm();
        res.steps.push_back(std::move(step));
    }
    return res;
}

ContinuationResult continue_in_gamma(const OperatorContext& ctx, double gamma_max, int steps, const NewtonOptions& opt)
{
    if (steps < 1) throw std::invalid_argument("continue_in_gamma: steps must be at least 1");
    std::vector<double> g;
    for (int k = 0; k <= steps; ++k) g.push_back(gamma_max * k / steps);
    return continue_along(ctx, g, opt);
}

}  // namespace axistar::op
