#include "axistar/profiles.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace axistar::profiles {

using std::numbers::pi;

PolytropeProfile::PolytropeProfile(double mu_, double e0_) : mu(mu_), e0(e0_)
{
    if (!(mu > -0.5 && mu < 3.5))
        throw std::invalid_argument("PolytropeProfile: mu must lie in (-1/2, 7/2)");
    if (!std::isfinite(e0)) throw std::invalid_argument("PolytropeProfile: E0 must be finite");
}

double PolytropeProfile::operator()(double e) const
{
    return e < e0 ? std::pow(e0 - e, mu) : 0.0;
}

double phi_eval(const PolytropeProfile& profile, double e) { return profile(e); }

std::string to_string(RotationKind kind)
{
    switch (kind) {
    case RotationKind::EvenGaussian: return "even-gaussian";
    case RotationKind::SkewedRational: return "skewed-rational";
    case RotationKind::CustomTable: return "custom-table";
    }
    return "unknown";
}

RotationKind rotation_kind_from_string(const std::string& name)
{
    if (name == "even-gaussian") return RotationKind::EvenGaussian;
    if (name == "skewed-rational") return RotationKind::SkewedRational;
    if (name == "custom-table") return RotationKind::CustomTable;
    throw std::invalid_argument("unknown psi kind '" + name + "'");
}

RotationProfile RotationProfile::even_gaussian(double a)
{
    if (!(a > 0) || !std::isfinite(a)) throw std::invalid_argument("even-gaussian: need a > 0");
    RotationProfile r;
    r.kind_ = RotationKind::EvenGaussian;
    r.params_ = {a};
    return r;
}

RotationProfile RotationProfile::skewed_rational(double b, double c)
{
    if (!(b > 0 && b < 1)) throw std::invalid_argument("skewed-rational: need 0 < b < 1");
    if (!(c >= 0 && c < b)) throw std::invalid_argument("skewed-rational: need 0 <= c < b");
    RotationProfile r;
    r.kind_ = RotationKind::SkewedRational;
    r.params_ = {b, c};
    return r;
}

RotationProfile RotationProfile::custom_table(std::vector<double> p, std::vector<double> psi)
{
    if (p.size() != psi.size() || p.size() < 7)
        throw std::invalid_argument("custom-table: need matching columns with at least 7 rows");
    for (std::size_t i = 1; i < p.size(); ++i)
        if (!(p[i] > p[i - 1])) throw std::invalid_argument("custom-table: P must increase");
    std::size_t zero = p.size();
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i] == 0) zero = i;
    if (zero == p.size()) throw std::invalid_argument("custom-table: table must contain P = 0");
    if (psi[zero] != 1) throw std::invalid_argument("custom-table: psi(0) must equal 1");
    if (zero < 3 || p.size() - zero < 4)
        throw std::invalid_argument("custom-table: need at least 4 points on each side of P = 0");

    using numerics::SplineBasis;
    using numerics::SplineEnd;
    std::vector<double> kp, vp, kn, vn;
    for (std::size_t i = zero; i < p.size(); ++i) kp.push_back(p[i]), vp.push_back(psi[i]);
    for (std::size_t i = zero + 1; i-- > 0;) kn.push_back(-p[i]), vn.push_back(psi[i]);

    RotationProfile r;
    r.kind_ = RotationKind::CustomTable;
    r.pos_ = numerics::CubicSpline(
        std::make_shared<SplineBasis>(kp, SplineEnd::ClampedZero, SplineEnd::ClampedZero), vp);
    r.neg_ = numerics::CubicSpline(
        std::make_shared<SplineBasis>(kn, SplineEnd::ClampedZero, SplineEnd::ClampedZero), vn);
    r.pmax_ = p.back();
    r.pmin_ = p.front();
    r.params_ = {r.pmin_, r.pmax_, static_cast<double>(p.size())};
    r.validate_table();
    return r;
}

RotationProfile RotationProfile::custom_table_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("custom-table: cannot open " + path);
    std::vector<double> p, psi;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        for (auto& ch : line)
            if (ch == ',') ch = ' ';
        std::istringstream ss(line);
        double a, b;
        if (!(ss >> a >> b)) {
            if (p.empty()) continue;  // header row
            throw std::invalid_argument("custom-table: malformed row '" + line + "'");
        }
        p.push_back(a);
        psi.push_back(b);
    }
    return custom_table(std::move(p), std::move(psi));
}

void RotationProfile::validate_table() const
{
    // sample every interval densely: psi >= 0 and psi - 1 keeps one strict sign on each side
    auto check_side = [&](const numerics::CubicSpline& s) {
        const auto& k = s.basis().knots();
        double sign = 0;
        for (std::size_t i = 0; i + 1 < k.size(); ++i)
            for (int j = (i == 0 ? 1 : 0); j <= 64; ++j) {
                double x = k[i] + (k[i + 1] - k[i]) * j / 64.0;
                double f = s(x);
                if (!(f >= 0)) throw std::invalid_argument("custom-table: psi becomes negative");
                double d = f - 1;
                if (d == 0) throw std::invalid_argument("custom-table: psi equals 1 away from P = 0");
                if (sign == 0) sign = d > 0 ? 1 : -1;
                if (d * sign < 0) throw std::invalid_argument("custom-table: psi crosses 1 away from P = 0");
            }
    };
    check_side(pos_);
    check_side(neg_);
}

void RotationProfile::eval_table(double p, double* f, double* df, double* d2f) const
{
    if (p >= 0) {
        double x = std::min(p, pmax_);
        pos_.eval(x, f, df, d2f);
        if (p > pmax_) *df = *d2f = 0;
    } else {
        double x = std::min(-p, -pmin_);
        neg_.eval(x, f, df, d2f);
        *df = -*df;
        if (p < pmin_) *df = *d2f = 0;
    }
}

bool RotationProfile::is_even() const { return kind_ == RotationKind::EvenGaussian; }

double RotationProfile::value(double p) const
{
    switch (kind_) {
    case RotationKind::EvenGaussian: return std::exp(-params_[0] * p * p);
    case RotationKind::SkewedRational: {
        double p2 = p * p, p3 = p2 * p, p4 = p2 * p2;
        return 1 + params_[0] * p3 / (1 + p4) + params_[1] * p4 * std::exp(-p2);
    }
    case RotationKind::CustomTable: {
        double f, df, d2f;
        eval_table(p, &f, &df, &d2f);
        return f;
    }
    }
    return 0;
}

double RotationProfile::deriv(double p) const
{
    switch (kind_) {
    case RotationKind::EvenGaussian: {
        double a = params_[0];
        return -2 * a * p * std::exp(-a * p * p);
    }
    case RotationKind::SkewedRational: {
        double b = params_[0], c = params_[1];
        double p2 = p * p, p4 = p2 * p2, p6 = p4 * p2;
        double q4 = 1 + p4;
        return b * (3 * p2 - p6) / (q4 * q4) + c * (4 * p2 * p - 2 * p4 * p) * std::exp(-p2);
    }
    case RotationKind::CustomTable: {
        double f, df, d2f;
        eval_table(p, &f, &df, &d2f);
        return df;
    }
    }
    return 0;
}

double RotationProfile::second_deriv(double p) const
{
    switch (kind_) {
    case RotationKind::EvenGaussian: {
        double a = params_[0];
        return (4 * a * a * p * p - 2 * a) * std::exp(-a * p * p);
    }
    case RotationKind::SkewedRational: {
        double b = params_[0], c = params_[1];
        double p2 = p * p, p4 = p2 * p2, p5 = p4 * p;
        double q4 = 1 + p4;
        return b * (6 * p - 24 * p5 + 2 * p5 * p4) / (q4 * q4 * q4)
               + c * (12 * p2 - 18 * p4 + 4 * p4 * p2) * std::exp(-p2);
    }
    case RotationKind::CustomTable: {
        double f, df, d2f;
        eval_table(p, &f, &df, &d2f);
        return d2f;
    }
    }
    return 0;
}

double RotationProfile::even_minus_one(double p) const
{
    switch (kind_) {
    case RotationKind::EvenGaussian: return std::expm1(-params_[0] * p * p);
    case RotationKind::SkewedRational: {
        double p2 = p * p;
        return params_[1] * p2 * p2 * std::exp(-p2);
    }
    case RotationKind::CustomTable: return 0.5 * ((value(p) - 1) + (value(-p) - 1));
    }
    return 0;
}

double RotationProfile::even_deriv(double p) const
{
    switch (kind_) {
    case RotationKind::EvenGaussian: return deriv(p);
    case RotationKind::SkewedRational: {
        double c = params_[1];
        double p2 = p * p, p3 = p2 * p;
        return c * (4 * p3 - 2 * p3 * p2) * std::exp(-p2);
    }
    case RotationKind::CustomTable: return 0.5 * (deriv(p) - deriv(-p));
    }
    return 0;
}

double RotationProfile::odd_part(double p) const
{
    switch (kind_) {
    case RotationKind::EvenGaussian: return 0;
    case RotationKind::SkewedRational: {
        double p2 = p * p;
        return params_[0] * p2 * p / (1 + p2 * p2);
    }
    case RotationKind::CustomTable: return 0.5 * (value(p) - value(-p));
    }
    return 0;
}

double psi_eval(const RotationProfile& profile, double p) { return profile.value(p); }
double psi_deriv(const RotationProfile& profile, double p) { return profile.deriv(p); }
double psi_second_deriv(const RotationProfile& profile, double p) { return profile.second_deriv(p); }

EnergyMomentum energy_momentum(const std::array<double, 3>& x, const std::array<double, 3>& v, double potential)
{
    EnergyMomentum em;
    em.e = 0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) + potential;
    em.p = x[0] * v[1] - x[1] * v[0];
    return em;
}

DensityIntegrals::DensityIntegrals(PolytropeProfile phi, RotationProfile psi, QuadratureOrders orders)
    : phi_(phi), psi_(std::move(psi)), orders_(orders)
{
    if (orders.outer < 1 || orders.inner < 2)
        throw std::invalid_argument("DensityIntegrals: quadrature orders too small");
    c_ = 4 * std::numbers::sqrt2 * pi * std::beta(phi_.mu + 1, 1.5);
    outer_h_ = numerics::gauss_jacobi(orders.outer, phi_.mu, 0.5);
    outer_du_ = numerics::gauss_jacobi(orders.outer, phi_.mu, -0.5);
    auto in = numerics::gauss_legendre(orders.inner);
    for (std::size_t i = 0; i < in.size(); ++i)
        if (in.nodes[i] > 0) tau_.push_back(in.nodes[i]), wtau_.push_back(in.weights[i]);
    for (double t : outer_h_.nodes) wfac_h_.push_back(std::sqrt(1 - t));
    for (double t : outer_du_.nodes) wfac_du_.push_back(std::sqrt(1 - t));
}

double DensityIntegrals::h0(double u) const
{
    double d = phi_.e0 - u;
    return d > 0 ? c_ * std::pow(d, phi_.density_exponent()) : 0.0;
}

double DensityIntegrals::h0_du(double u) const
{
    double d = phi_.e0 - u;
    return d > 0 ? -c_ * phi_.density_exponent() * std::pow(d, phi_.mu + 0.5) : 0.0;
}

// int_{-1}^{1} (psi_even(a tau) - 1) dtau
double DensityIntegrals::inner_even(double a) const
{
    double s = 0;
    for (std::size_t i = 0; i < tau_.size(); ++i) s += wtau_[i] * psi_.even_minus_one(a * tau_[i]);
    return 2 * s;
}

// int_{-1}^{1} tau psi_even'(a tau) dtau
double DensityIntegrals::inner_even_deriv(double a) const
{
    double s = 0;
    for (std::size_t i = 0; i < tau_.size(); ++i) s += wtau_[i] * tau_[i] * psi_.even_deriv(a * tau_[i]);
    return 2 * s;
}

// int_{-1}^{1} tau psi_odd(a tau) dtau
double DensityIntegrals::inner_odd(double a) const
{
    double s = 0;
    for (std::size_t i = 0; i < tau_.size(); ++i) s += wtau_[i] * tau_[i] * psi_.odd_part(a * tau_[i]);
    return 2 * s;
}

double DensityIntegrals::h(double gamma, double r, double u) const
{
    if (r < 0) throw std::invalid_argument("h: negative cylindrical radius");
    double d = phi_.e0 - u;
    if (!(d > 0)) return 0.0;
    return c_ * std::pow(d, phi_.density_exponent()) + h_excess(gamma, r, u);
}

double DensityIntegrals::h_excess(double gamma, double r, double u) const
{
    if (r < 0) throw std::invalid_argument("h: negative cylindrical radius");
    double d = phi_.e0 - u;
    if (!(d > 0) || gamma == 0 || r == 0) return 0.0;
    double sq = std::sqrt(2 * d);
    double s = 0;
    for (std::size_t i = 0; i < outer_h_.size(); ++i)
        s += outer_h_.weights[i] * inner_even(gamma * r * sq * wfac_h_[i]);
    return 2 * pi * std::pow(d, phi_.mu + 1) * sq * s;
}

double DensityIntegrals::h_du(double gamma, double r, double u) const
{
    if (r < 0) throw std::invalid_argument("h_du: negative cylindrical radius");
    double d = phi_.e0 - u;
    if (!(d > 0)) return 0.0;
    double base = -c_ * phi_.density_exponent() * std::pow(d, phi_.mu + 0.5);
    if (gamma == 0 || r == 0) return base;
    double sq = std::sqrt(2 * d);
    double s = 0;
    for (std::size_t i = 0; i < outer_du_.size(); ++i)
        s += outer_du_.weights[i] * psi_.even_minus_one(gamma * r * sq * wfac_du_[i]);
    return base - 4 * pi * std::pow(d, phi_.mu + 1) / sq * s;
}

double DensityIntegrals::h_dr(double gamma, double r, double u) const
{
    if (r < 0) throw std::invalid_argument("h_dr: negative cylindrical radius");
    double d = phi_.e0 - u;
    if (!(d > 0) || gamma == 0 || r == 0) return 0.0;
    double sq = std::sqrt(2 * d);
    double s = 0;
    for (std::size_t i = 0; i < outer_h_.size(); ++i) {
        double w = sq * wfac_h_[i];
        s += outer_h_.weights[i] * w * inner_even_deriv(gamma * r * w);
    }
    return 2 * pi * gamma * std::pow(d, phi_.mu + 1) * sq * s;
}

double DensityIntegrals::current(double gamma, double r, double u) const
{
    if (r < 0) throw std::invalid_argument("current: negative cylindrical radius");
    double d = phi_.e0 - u;
    if (!(d > 0) || gamma == 0 || r == 0 || psi_.is_even()) return 0.0;
    double sq = std::sqrt(2 * d);
    double s = 0;
    for (std::size_t i = 0; i < outer_h_.size(); ++i) {
        double w = sq * wfac_h_[i];
        s += outer_h_.weights[i] * w * inner_odd(gamma * r * w);
    }
    return 2 * pi * std::pow(d, phi_.mu + 1) * sq * s;
}

double h_eval(const DensityIntegrals& d, double gamma, double r, double u) { return d.h(gamma, r, u); }
double h_du(const DensityIntegrals& d, double gamma, double r, double u) { return d.h_du(gamma, r, u); }
double h_dr(const DensityIntegrals& d, double gamma, double r, double u) { return d.h_dr(gamma, r, u); }
double current_magnitude(const DensityIntegrals& d, double gamma, double r, double u)
{
    return d.current(gamma, r, u);
}

}  // namespace axistar::profiles
