#include "axistar/field.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace axistar::field {

using std::numbers::pi;

RadialPanels::RadialPanels(std::vector<double> breaks, int q) : breaks_(std::move(breaks)), q_(q)
{
    if (breaks_.size() < 2 || breaks_.front() != 0.0) throw std::invalid_argument("RadialPanels: breaks must start at 0");
    for (std::size_t i = 1; i < breaks_.size(); ++i)
        if (!(breaks_[i] > breaks_[i - 1])) throw std::invalid_argument("RadialPanels: breaks must increase");
    if (q < 2) throw std::invalid_argument("RadialPanels: q must be at least 2");
    auto g = numerics::gauss_legendre(q, 0.0, 1.0);
    ref_ = g.nodes;
    for (int p = 0; p < panel_count(); ++p)
        for (int i = 0; i < q; ++i) {
            nodes_.push_back(a(p) + (b(p) - a(p)) * ref_[i]);
            weights_.push_back((b(p) - a(p)) * g.weights[i]);
        }
    Eigen::MatrixXd V(q, q);
    for (int k = 0; k < q; ++k)
        for (int m = 0; m < q; ++m) V(k, m) = std::pow(ref_[k], m);
    // C V^T = I
    Eigen::MatrixXd C = V.transpose().partialPivLu().solve(Eigen::MatrixXd::Identity(q, q));
    mono_.resize(q * q);
    for (int i = 0; i < q; ++i)
        for (int m = 0; m < q; ++m) mono_[i * q + m] = C(i, m);
}

std::shared_ptr<const RadialPanels> RadialPanels::standard()
{
    std::vector<double> br;
    for (int i = 0; i < 16; ++i) br.push_back(0.05 * i);
    for (int i = 0; i < 32; ++i) br.push_back(0.8 + 0.0125 * i);
    for (int i = 0; i <= 8; ++i) br.push_back(1.2 + 0.1 * i);
    return std::make_shared<RadialPanels>(std::move(br), 6);
}

int RadialPanels::panel_of(double r) const
{
    auto it = std::upper_bound(breaks_.begin(), breaks_.end(), r);
    int p = static_cast<int>(it - breaks_.begin()) - 1;
    return std::clamp(p, 0, panel_count() - 1);
}

void RadialPanels::lagrange(int p, double r, double* ell) const
{
    double t = (r - a(p)) / (b(p) - a(p));
    for (int i = 0; i < q_; ++i) {
        double v = 1;
        for (int j = 0; j < q_; ++j)
            if (j != i) v *= (t - ref_[j]) / (ref_[i] - ref_[j]);
        ell[i] = v;
    }
}

AxiField::AxiField(std::shared_ptr<const RadialPanels> panels, std::shared_ptr<const numerics::LegendreBasis> polar,
                   std::vector<double> values)
    : panels_(std::move(panels)), polar_(std::move(polar)), values_(std::move(values))
{
    if (!polar_->even_only()) throw std::invalid_argument("AxiField: polar basis must be even-only");
    const int n = radial_count(), H = polar_count(), S = sectors();
    if (static_cast<int>(values_.size()) != n * H) throw std::invalid_argument("AxiField: value count mismatch");
    moments_.assign(static_cast<std::size_t>(S) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        auto c = polar_->forward_half(&values_[i * H]);
        for (int s = 0; s < S; ++s) moments_[s * n + i] = c[s];
    }
}

AxiField AxiField::from_function(std::shared_ptr<const RadialPanels> panels,
                                 std::shared_ptr<const numerics::LegendreBasis> polar,
                                 const std::function<double(double, double)>& f)
{
    const int n = panels->node_count(), H = polar->half_count();
    std::vector<double> v(static_cast<std::size_t>(n) * H);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < H; ++j) v[i * H + j] = f(panels->node(i), polar->node(polar->half_index(j)));
    return AxiField(std::move(panels), std::move(polar), std::move(v));
}

AxiField AxiField::from_moments(std::shared_ptr<const RadialPanels> panels,
                                std::shared_ptr<const numerics::LegendreBasis> polar, std::vector<double> moments)
{
    const int n = panels->node_count(), H = polar->half_count(), S = polar->sector_count();
    if (static_cast<int>(moments.size()) != n * S) throw std::invalid_argument("AxiField: moment count mismatch");
    std::vector<double> v(static_cast<std::size_t>(n) * H, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < H; ++j) {
            int k = polar->half_index(j);
            double sum = 0;
            for (int s = 0; s < S; ++s) sum += moments[s * n + i] * polar->P(s, k);
            v[i * H + j] = sum;
        }
    return AxiField(std::move(panels), std::move(polar), std::move(v));
}

double AxiField::reconstruction_error() const
{
    const int n = radial_count(), H = polar_count(), S = sectors();
    double worst = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < H; ++j) {
            int k = polar_->half_index(j);
            double sum = 0;
            for (int s = 0; s < S; ++s) sum += moment(s, i) * polar_->P(s, k);
            worst = std::max(worst, std::fabs(sum - value(i, j)));
        }
    return worst;
}

double AxiField::mass() const
{
    double m = 0;
    for (int i = 0; i < radial_count(); ++i) m += panels_->weight(i) * panels_->node(i) * panels_->node(i) * moment(0, i);
    return 4 * pi * m;
}

AxiField density_from_state(double gamma, const geometry::DeformationField& field, const spherical::RadialState& base,
                            const profiles::DensityIntegrals& profiles, std::shared_ptr<const RadialPanels> panels,
                            std::shared_ptr<const numerics::LegendreBasis> polar)
{
    const int n = panels->node_count(), H = polar->half_count();
    std::vector<double> v(static_cast<std::size_t>(n) * H, 0.0);
    for (int i = 0; i < n; ++i) {
        double s = panels->node(i);
        for (int j = 0; j < H; ++j) {
            double c = polar->node(polar->half_index(j));
            double t = geometry::g_invert_radius(field, c, s);
            if (t >= 1) continue;
            double u = base.u0_at(t);
            v[i * H + j] = profiles.h(gamma, s * std::sqrt(std::max(0.0, 1 - c * c)), u);
        }
    }
    return AxiField(std::move(panels), std::move(polar), std::move(v));
}

namespace {
const int kSubRule = 12;
}  // namespace

PotentialField::PotentialField(const AxiField& density)
    : panels_(density.panels_ptr()), S_(density.sectors()), sigma_(density.moments()),
      sub_(numerics::gauss_legendre(kSubRule, 0.0, 1.0))
{
    const RadialPanels& P = *panels_;
    const int np = P.panel_count(), q = P.q(), n = P.node_count();
    acum_.assign(static_cast<std::size_t>(S_) * (np + 1), 0.0);
    bsuf_.assign(static_cast<std::size_t>(S_) * (np + 1), 0.0);
    const auto& C = P.first_panel_monomials();
    std::vector<double> ell(q);
    for (int s = 0; s < S_; ++s) {
        const int l = 2 * s;
        const double* sig = &sigma_[s * n];
        double* A = &acum_[s * (np + 1)];
        double* B = &bsuf_[s * (np + 1)];
        std::vector<double> afull(np, 0.0), bfull(np, 0.0);
        for (int p = 0; p < np; ++p) {
            double a = P.a(p), b = P.b(p);
            if (p == 0) {
                double sum = 0;
                for (int i = 0; i < q; ++i) {
                    double w = 0;
                    for (int m = 0; m < q; ++m) w += C[i * q + m] / (l + 3 + m);
                    sum += w * sig[i];
                }
                afull[p] = std::pow(b, l + 3) * sum;
                continue;
            }
            double sa = 0, sb = 0;
            for (int g = 0; g < kSubRule; ++g) {
                double x = a + (b - a) * sub_.nodes[g], w = (b - a) * sub_.weights[g];
                P.lagrange(p, x, ell.data());
                double f = 0;
                for (int i = 0; i < q; ++i) f += ell[i] * sig[p * q + i];
                sa += w * std::pow(x, l + 2) * f;
                sb += w * std::pow(x, 1 - l) * f;
            }
            afull[p] = sa;
            bfull[p] = sb;
        }
        for (int p = 0; p < np; ++p) A[p + 1] = A[p] + afull[p];
        for (int p = np - 1; p >= 1; --p) B[p] = B[p + 1] + bfull[p];
    }
    mass_ = 4 * pi * acum_[np];
}

namespace {

// scaled partial-panel weights: alpha[s*q+i] = r^{-(l+1)} int_a^r s^{l+2} ell_i,
// beta[s*q+i] = r^l int_r^b s^{1-l} ell_i; requires r > 0
void partial_weights(const RadialPanels& P, const numerics::QuadratureRule& sub_, int p, double r, int S,
                     std::vector<double>& alpha, std::vector<double>& beta)
{
    const int q = P.q();
    alpha.assign(static_cast<std::size_t>(S) * q, 0.0);
    beta.assign(static_cast<std::size_t>(S) * q, 0.0);
    double a = P.a(p), b = P.b(p);
    if (p == 0) {
        const auto& C = P.first_panel_monomials();
        double tau = std::min(r / b, 1.0);
        double lt = -std::log(tau);
        std::vector<double> tp(q + 3);
        for (int m = 0; m < q + 3; ++m) tp[m] = std::pow(tau, m);
        for (int s = 0; s < S; ++s) {
            int l = 2 * s;
            double tl = std::pow(tau, l);
            for (int i = 0; i < q; ++i) {
                double sa = 0, sb = 0;
                for (int m = 0; m < q; ++m) {
                    double c = C[i * q + m];
                    sa += c * tp[2 + m] / (l + 3 + m);
                    int e = 2 - l + m;
                    sb += e == 0 ? c * tl * lt : c * (tl - tp[2 + m]) / e;
                }
                alpha[s * q + i] = b * b * sa;
                beta[s * q + i] = b * b * sb;
            }
        }
        return;
    }
    std::vector<double> ell(q);
    for (int g = 0; g < kSubRule; ++g) {
        // [a, r]
        double x = a + (r - a) * sub_.nodes[g], w = (r - a) * sub_.weights[g];
        P.lagrange(p, x, ell.data());
        double ratio = x / r, pw = ratio * x * w;  // (x/r)^{l+1} x w at l = 0
        for (int s = 0; s < S; ++s) {
            for (int i = 0; i < q; ++i) alpha[s * q + i] += pw * ell[i];
            pw *= ratio * ratio;
        }
        // [r, b]
        x = r + (b - r) * sub_.nodes[g];
        w = (b - r) * sub_.weights[g];
        P.lagrange(p, x, ell.data());
        ratio = r / x;
        pw = x * w;
        for (int s = 0; s < S; ++s) {
            for (int i = 0; i < q; ++i) beta[s * q + i] += pw * ell[i];
            pw *= ratio * ratio;
        }
    }
}

}  // namespace

void PotentialField::partial(int p, double r, int S, std::vector<double>& alpha, std::vector<double>& beta) const
{
    partial_weights(*panels_, sub_, p, r, S, alpha, beta);
}

void PotentialField::integrals(int s, double r, double* A, double* B) const
{
    const RadialPanels& P = *panels_;
    const int np = P.panel_count(), q = P.q(), n = P.node_count(), l = 2 * s;
    if (r >= P.r_max()) {
        *A = acum_[s * (np + 1) + np];
        *B = 0;
        return;
    }
    if (r <= 0) {
        *A = 0;
        *B = l == 0 ? bsuf_[s * (np + 1) + 1] : INFINITY;
        if (l == 0) {
            const auto& C = P.first_panel_monomials();
            double b = P.b(0);
            for (int i = 0; i < q; ++i) {
                double w = 0;
                for (int m = 0; m < q; ++m) w += C[i * q + m] / (2 + m);
                *B += b * b * w * sigma_[i];
            }
        }
        return;
    }
    int p = P.panel_of(r);
    std::vector<double> al, be;
    partial(p, r, s + 1, al, be);
    double sa = 0, sb = 0;
    for (int i = 0; i < q; ++i) {
        sa += al[s * q + i] * sigma_[s * n + p * q + i];
        sb += be[s * q + i] * sigma_[s * n + p * q + i];
    }
    *A = acum_[s * (np + 1) + p] + sa * std::pow(r, l + 1);
    *B = bsuf_[s * (np + 1) + p + 1] + sb / std::pow(r, l);
}

PotentialField::Meridional PotentialField::meridional(double r, double c, int order) const
{
    const RadialPanels& P = *panels_;
    const int np = P.panel_count(), q = P.q(), n = P.node_count();
    const int Lmax = 2 * (S_ - 1);
    std::vector<double> pl(Lmax + 1), dpl(Lmax + 1), d2pl(Lmax + 1);
    numerics::legendre_all(Lmax, c, pl.data(), dpl.data(), d2pl.data());
    Meridional out;
    if (r <= 0) {
        double A, B;
        integrals(0, 0.0, &A, &B);
        out.v = -4 * pi * B;
        return out;
    }
    std::vector<double> Ar(S_), Br(S_), sig(S_, 0.0);
    if (r >= P.r_max()) {
        for (int s = 0; s < S_; ++s) {
            Ar[s] = acum_[s * (np + 1) + np] / std::pow(r, 2 * s + 1);
            Br[s] = 0;
        }
    } else {
        int p = P.panel_of(r);
        std::vector<double> al, be, ell(q);
        partial(p, r, S_, al, be);
        P.lagrange(p, r, ell.data());
        for (int s = 0; s < S_; ++s) {
            int l = 2 * s;
            const double* sg = &sigma_[s * n + p * q];
            double sa = 0, sb = 0, sv = 0;
            for (int i = 0; i < q; ++i) {
                sa += al[s * q + i] * sg[i];
                sb += be[s * q + i] * sg[i];
                sv += ell[i] * sg[i];
            }
            double A0 = acum_[s * (np + 1) + p], B0 = bsuf_[s * (np + 1) + p + 1];
            Ar[s] = (A0 == 0 ? 0.0 : A0 / std::pow(r, l + 1)) + sa;
            Br[s] = (B0 == 0 ? 0.0 : B0 * std::pow(r, l)) + sb;
            sig[s] = sv;
        }
    }
    for (int s = 0; s < S_; ++s) {
        int l = 2 * s;
        double k = -4 * pi / (2 * l + 1);
        double R = Ar[s] + Br[s];
        out.v += k * R * pl[l];
        if (order >= 1) {
            double dR = (-(l + 1) * Ar[s] + l * Br[s]) / r;
            out.vr += k * dR * pl[l];
            out.vc += k * R * dpl[l];
            if (order >= 2) {
                double d2R = ((l + 1.0) * (l + 2) * Ar[s] + l * (l - 1.0) * Br[s]) / (r * r) - (2 * l + 1) * sig[s];
                out.vrr += k * d2R * pl[l];
                out.vrc += k * dR * dpl[l];
                out.vcc += k * R * d2pl[l];
            }
        }
    }
    return out;
}

void PotentialField::radial(int s, double r, double* R, double* dR, double* d2R) const
{
    // isolate one sector through the meridional machinery with P_l(1) = 1
    const int l = 2 * s;
    double A, B;
    integrals(s, r, &A, &B);
    if (r <= 0) {
        *R = l == 0 ? B : 0.0;
        if (dR) *dR = 0;
        if (d2R) *d2R = NAN;
        return;
    }
    double Ar = A / std::pow(r, l + 1), Br = B * std::pow(r, l);
    *R = Ar + Br;
    if (dR) *dR = (-(l + 1) * Ar + l * Br) / r;
    if (d2R) {
        double sv = 0;
        if (r < panels_->r_max()) {
            int p = panels_->panel_of(r), q = panels_->q();
            std::vector<double> ell(q);
            panels_->lagrange(p, r, ell.data());
            for (int i = 0; i < q; ++i) sv += ell[i] * sigma_[s * panels_->node_count() + p * q + i];
        }
        *d2R = ((l + 1.0) * (l + 2) * Ar + l * (l - 1.0) * Br) / (r * r) - (2 * l + 1) * sv;
    }
}

void PotentialField::eval(const Vec3& x, double* v, Vec3* g, Mat3* h) const
{
    double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
    if (r == 0) {
        if (v) *v = meridional(0, 1, 0).v;
        if (g) *g = {0, 0, 0};
        if (h) {
            // ray limit along the axis
            double eps = 1e-7 * panels_->b(0);
            eval({0, 0, eps}, nullptr, nullptr, h);
        }
        return;
    }
    double c = x[2] / r;
    int order = h ? 2 : (g ? 1 : 0);
    auto m = meridional(r, c, order);
    if (v) *v = m.v;
    if (order == 0) return;
    Vec3 xh{x[0] / r, x[1] / r, x[2] / r};
    Vec3 dc{-c * xh[0] / r, -c * xh[1] / r, (1 - c * xh[2]) / r};
    if (g)
        for (int i = 0; i < 3; ++i) (*g)[i] = m.vr * xh[i] + m.vc * dc[i];
    if (h) {
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double drr = ((i == j) - xh[i] * xh[j]) / r;
                double dcc = (-(i == 2) * xh[j] - (j == 2) * xh[i] - c * (i == j) + 3 * c * xh[i] * xh[j]) / (r * r);
                (*h)[i][j] = m.vrr * xh[i] * xh[j] + m.vrc * (xh[i] * dc[j] + xh[j] * dc[i]) + m.vcc * dc[i] * dc[j]
                             + m.vr * drr + m.vc * dcc;
            }
    }
}

double PotentialField::value(const Vec3& x) const
{
    double v;
    eval(x, &v, nullptr, nullptr);
    return v;
}

Vec3 PotentialField::grad(const Vec3& x) const
{
    Vec3 g;
    eval(x, nullptr, &g, nullptr);
    return g;
}

Mat3 PotentialField::hessian(const Vec3& x) const
{
    Mat3 h;
    eval(x, nullptr, nullptr, &h);
    return h;
}

PotentialField::Probe::Probe(std::shared_ptr<const RadialPanels> panels, int sectors, const std::vector<Vec3>& points)
    : panels_(std::move(panels)), S_(sectors)
{
    const RadialPanels& P = *panels_;
    const int np = P.panel_count(), q = P.q(), n = P.node_count();
    auto sub = numerics::gauss_legendre(kSubRule, 0.0, 1.0);
    const auto& C = P.first_panel_monomials();
    afull_.assign(static_cast<std::size_t>(S_) * n, 0.0);
    bfull_.assign(static_cast<std::size_t>(S_) * n, 0.0);
    std::vector<double> ell(q);
    for (int s = 0; s < S_; ++s) {
        const int l = 2 * s;
        double b = P.b(0);
        for (int i = 0; i < q; ++i) {
            double w = 0;
            for (int m = 0; m < q; ++m) w += C[i * q + m] / (l + 3 + m);
            afull_[s * n + i] = std::pow(b, l + 3) * w;
        }
        for (int p = 1; p < np; ++p) {
            double a = P.a(p), bb = P.b(p);
            for (int g = 0; g < kSubRule; ++g) {
                double x = a + (bb - a) * sub.nodes[g], w = (bb - a) * sub.weights[g];
                P.lagrange(p, x, ell.data());
                for (int i = 0; i < q; ++i) {
                    afull_[s * n + p * q + i] += w * std::pow(x, l + 2) * ell[i];
                    bfull_[s * n + p * q + i] += w * std::pow(x, 1 - l) * ell[i];
                }
            }
        }
    }
    b0_.assign(q, 0.0);
    for (int i = 0; i < q; ++i) {
        double w = 0;
        for (int m = 0; m < q; ++m) w += C[i * q + m] / (2 + m);
        b0_[i] = P.b(0) * P.b(0) * w;
    }
    const int npt = static_cast<int>(points.size());
    r_.resize(npt);
    panel_.resize(npt);
    pl_.assign(static_cast<std::size_t>(npt) * S_, 0.0);
    alpha_.assign(static_cast<std::size_t>(npt) * S_ * q, 0.0);
    beta_.assign(static_cast<std::size_t>(npt) * S_ * q, 0.0);
    std::vector<double> pl(2 * S_ - 1), al, be;
    for (int k = 0; k < npt; ++k) {
        const Vec3& x = points[k];
        double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
        r_[k] = r;
        panel_[k] = -1;
        if (r <= 0) continue;
        numerics::legendre_all(2 * S_ - 2, x[2] / r, pl.data());
        for (int s = 0; s < S_; ++s) pl_[k * S_ + s] = pl[2 * s];
        if (r >= P.r_max()) {
            panel_[k] = np;
            continue;
        }
        int p = P.panel_of(r);
        panel_[k] = p;
        partial_weights(P, sub, p, r, S_, al, be);
        std::copy(al.begin(), al.end(), alpha_.begin() + static_cast<std::ptrdiff_t>(k) * S_ * q);
        std::copy(be.begin(), be.end(), beta_.begin() + static_cast<std::ptrdiff_t>(k) * S_ * q);
    }
}

double PotentialField::Probe::origin(const std::vector<double>& moments) const
{
    const RadialPanels& P = *panels_;
    const int n = P.node_count(), q = P.q();
    double B = 0;
    for (int i = 0; i < q; ++i) B += b0_[i] * moments[i];
    for (int i = q; i < n; ++i) B += bfull_[i] * moments[i];
    return -4 * pi * B;
}

void PotentialField::Probe::values(const std::vector<double>& moments, double* out) const
{
    const RadialPanels& P = *panels_;
    const int np = P.panel_count(), q = P.q(), n = P.node_count();
    if (static_cast<int>(moments.size()) < S_ * n) throw std::invalid_argument("Probe::values: moment count");
    std::vector<double> A(static_cast<std::size_t>(S_) * (np + 1), 0.0), B(A.size(), 0.0);
    for (int s = 0; s < S_; ++s) {
        double* As = &A[s * (np + 1)];
        double* Bs = &B[s * (np + 1)];
        const double* sg = &moments[s * n];
        for (int p = 0; p < np; ++p) {
            double a = 0, b = 0;
            for (int i = 0; i < q; ++i) {
                a += afull_[s * n + p * q + i] * sg[p * q + i];
                b += bfull_[s * n + p * q + i] * sg[p * q + i];
            }
            As[p + 1] = As[p] + a;
            if (p >= 1) Bs[p] = b;
        }
        Bs[np] = 0;
        for (int p = np - 1; p >= 1; --p) Bs[p] += Bs[p + 1];
    }
    const double v0 = origin(moments);
    for (int k = 0; k < size(); ++k) {
        int p = panel_[k];
        double r = r_[k];
        if (p < 0) {
            out[k] = v0;
            continue;
        }
        double v = 0, rl = 1;  // r^l
        for (int s = 0; s < S_; ++s) {
            int l = 2 * s;
            double R;
            if (p == np) {
                R = A[s * (np + 1) + np] / (rl * r);
            } else {
                const double* sg = &moments[s * n + p * q];
                const double* al = &alpha_[(static_cast<std::size_t>(k) * S_ + s) * q];
                const double* be = &beta_[(static_cast<std::size_t>(k) * S_ + s) * q];
                double sa = 0, sb = 0;
                for (int i = 0; i < q; ++i) sa += al[i] * sg[i], sb += be[i] * sg[i];
                double A0 = A[s * (np + 1) + p], B0 = B[s * (np + 1) + p + 1];
                R = (A0 == 0 ? 0.0 : A0 / (rl * r)) + sa + B0 * rl + sb;
            }
            v += -4 * pi / (2 * l + 1) * R * pl_[k * S_ + s];
            rl *= r * r;
        }
        out[k] = v;
    }
}

double potential_eval(const PotentialField& pot, const Vec3& x) { return pot.value(x); }
Vec3 potential_grad(const PotentialField& pot, const Vec3& x) { return pot.grad(x); }
Mat3 potential_hessian(const PotentialField& pot, const Vec3& x) { return pot.hessian(x); }
PotentialField solve_potential(const AxiField& density) { return PotentialField(density); }

}  // namespace axistar::field
