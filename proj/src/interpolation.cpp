#include "axistar/interpolation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace axistar::numerics {

SplineBasis::SplineBasis(std::vector<double> knots, SplineEnd left, SplineEnd right)
    : x_(std::move(knots))
{
    const int n = size();
    if (n < 4) throw std::invalid_argument("SplineBasis: need at least 4 knots");
    for (int i = 1; i < n; ++i)
        if (!(x_[i] > x_[i - 1])) throw std::invalid_argument("SplineBasis: knots must increase");

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n), B = Eigen::MatrixXd::Zero(n, n);
    auto h = [&](int i) { return x_[i + 1] - x_[i]; };
    for (int i = 1; i < n - 1; ++i) {
        A(i, i - 1) = h(i - 1);
        A(i, i) = 2 * (h(i - 1) + h(i));
        A(i, i + 1) = h(i);
        B(i, i - 1) = 6 / h(i - 1);
        B(i, i) = -6 / h(i - 1) - 6 / h(i);
        B(i, i + 1) = 6 / h(i);
    }
    switch (left) {
    case SplineEnd::Natural: A(0, 0) = 1; break;
    case SplineEnd::ClampedZero:
        A(0, 0) = 2 * h(0);
        A(0, 1) = h(0);
        B(0, 0) = -6 / h(0);
        B(0, 1) = 6 / h(0);
        break;
    case SplineEnd::NotAKnot:
        A(0, 0) = h(1);
        A(0, 1) = -(h(0) + h(1));
        A(0, 2) = h(0);
        break;
    }
    switch (right) {
    case SplineEnd::Natural: A(n - 1, n - 1) = 1; break;
    case SplineEnd::ClampedZero:
        A(n - 1, n - 2) = h(n - 2);
        A(n - 1, n - 1) = 2 * h(n - 2);
        B(n - 1, n - 2) = 6 / h(n - 2);
        B(n - 1, n - 1) = -6 / h(n - 2);
        break;
    case SplineEnd::NotAKnot:
        A(n - 1, n - 3) = h(n - 2);
        A(n - 1, n - 2) = -(h(n - 3) + h(n - 2));
        A(n - 1, n - 1) = h(n - 3);
        break;
    }
    Eigen::MatrixXd S = A.partialPivLu().solve(B);
    S_.resize(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) S_[i * n + j] = S(i, j);
}

std::vector<double> SplineBasis::second_derivatives(const double* v) const
{
    const int n = size();
    std::vector<double> m(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double s = 0;
        for (int j = 0; j < n; ++j) s += S_[i * n + j] * v[j];
        m[i] = s;
    }
    return m;
}

int SplineBasis::locate(double x) const
{
    const int n = size();
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    int i = static_cast<int>(it - x_.begin()) - 1;
    return std::clamp(i, 0, n - 2);
}

void SplineBasis::weights(double x, double* w, double* dw, double* d2w) const
{
    const int n = size();
    int i = locate(x);
    double h = x_[i + 1] - x_[i];
    double A = (x_[i + 1] - x) / h, B = 1 - A;
    double cA = (A * A * A - A) * h * h / 6, cB = (B * B * B - B) * h * h / 6;
    double dA = -(3 * A * A - 1) * h / 6, dB = (3 * B * B - 1) * h / 6;
    const double* Si = &S_[i * n];
    const double* Sj = &S_[(i + 1) * n];
    for (int m = 0; m < n; ++m) {
        w[m] = cA * Si[m] + cB * Sj[m];
        if (dw) dw[m] = dA * Si[m] + dB * Sj[m];
        if (d2w) d2w[m] = A * Si[m] + B * Sj[m];
    }
    w[i] += A;
    w[i + 1] += B;
    if (dw) {
        dw[i] -= 1 / h;
        dw[i + 1] += 1 / h;
    }
}

CubicSpline::CubicSpline(std::shared_ptr<const SplineBasis> basis, std::vector<double> values)
    : basis_(std::move(basis)), v_(std::move(values))
{
    if (static_cast<int>(v_.size()) != basis_->size())
        throw std::invalid_argument("CubicSpline: value count does not match knots");
    m_ = basis_->second_derivatives(v_.data());
}

double CubicSpline::operator()(double x) const
{
    double f;
    eval(x, &f);
    return f;
}

void CubicSpline::eval(double x, double* f, double* df, double* d2f) const
{
    const auto& k = basis_->knots();
    int i = basis_->locate(x);
    double h = k[i + 1] - k[i];
    double A = (k[i + 1] - x) / h, B = 1 - A;
    *f = A * v_[i] + B * v_[i + 1] + ((A * A * A - A) * m_[i] + (B * B * B - B) * m_[i + 1]) * h * h / 6;
    if (df)
        *df = (v_[i + 1] - v_[i]) / h - (3 * A * A - 1) * h / 6 * m_[i] + (3 * B * B - 1) * h / 6 * m_[i + 1];
    if (d2f) *d2f = A * m_[i] + B * m_[i + 1];
}

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y, std::vector<double> dy, bool limit)
    : x_(std::move(x)), y_(std::move(y)), d_(std::move(dy))
{
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw std::invalid_argument("MonotoneCubic: bad table");
    for (std::size_t i = 1; i < n; ++i)
        if (!(x_[i] > x_[i - 1])) throw std::invalid_argument("MonotoneCubic: abscissae must increase");
    std::vector<double> delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) delta[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
    if (d_.empty()) {
        d_.resize(n);
        d_[0] = delta[0];
        d_[n - 1] = delta[n - 2];
        for (std::size_t i = 1; i + 1 < n; ++i)
            d_[i] = delta[i - 1] * delta[i] <= 0 ? 0 : (delta[i - 1] + delta[i]) / 2;
    } else if (d_.size() != n) {
        throw std::invalid_argument("MonotoneCubic: slope count does not match");
    }
    // Fritsch-Carlson limiter
    for (std::size_t i = 0; limit && i + 1 < n; ++i) {
        if (delta[i] == 0) {
            d_[i] = d_[i + 1] = 0;
            continue;
        }
        double a = d_[i] / delta[i], b = d_[i + 1] / delta[i];
        if (a < 0) d_[i] = 0, a = 0;
        if (b < 0) d_[i + 1] = 0, b = 0;
        double s = a * a + b * b;
        if (s > 9) {
            double t = 3 / std::sqrt(s);
            d_[i] = t * a * delta[i];
            d_[i + 1] = t * b * delta[i];
        }
    }
}

double MonotoneCubic::operator()(double x) const
{
    double f;
    eval(x, &f);
    return f;
}

void MonotoneCubic::eval(double x, double* f, double* df, double* d2f) const
{
    const std::size_t n = x_.size();
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t i = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - x_.begin() - 1, 0), n - 2);
    double h = x_[i + 1] - x_[i];
    double t = (x - x_[i]) / h;
    double t2 = t * t, t3 = t2 * t;
    double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t, h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    *f = h00 * y_[i] + h10 * h * d_[i] + h01 * y_[i + 1] + h11 * h * d_[i + 1];
    if (df) {
        double g00 = 6 * t2 - 6 * t, g10 = 3 * t2 - 4 * t + 1, g01 = -6 * t2 + 6 * t, g11 = 3 * t2 - 2 * t;
        *df = (g00 * y_[i] + g01 * y_[i + 1]) / h + g10 * d_[i] + g11 * d_[i + 1];
    }
    if (d2f) {
        double k00 = 12 * t - 6, k10 = 6 * t - 4, k01 = -12 * t + 6, k11 = 6 * t - 2;
        *d2f = (k00 * y_[i] + k01 * y_[i + 1]) / (h * h) + (k10 * d_[i] + k11 * d_[i + 1]) / h;
    }
}

QuinticHermite::QuinticHermite(std::vector<double> x, std::vector<double> y, std::vector<double> dy,
                               std::vector<double> d2y)
    : x_(std::move(x)), y_(std::move(y)), d_(std::move(dy)), d2_(std::move(d2y))
{
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n || d_.size() != n || d2_.size() != n)
        throw std::invalid_argument("QuinticHermite: bad table");
    for (std::size_t i = 1; i < n; ++i)
        if (!(x_[i] > x_[i - 1])) throw std::invalid_argument("QuinticHermite: abscissae must increase");
}

double QuinticHermite::operator()(double x) const
{
    double f;
    eval(x, &f);
    return f;
}

void QuinticHermite::eval(double x, double* f, double* df, double* d2f) const
{
    const std::size_t n = x_.size();
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t i = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - x_.begin() - 1, 0), n - 2);
    double h = x_[i + 1] - x_[i];
    double t = (x - x_[i]) / h;
    double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
    double a0 = y_[i], a1 = h * d_[i], a2 = h * h * d2_[i];
    double b0 = y_[i + 1], b1 = h * d_[i + 1], b2 = h * h * d2_[i + 1];
    *f = a0 * (1 - 10 * t3 + 15 * t4 - 6 * t5) + a1 * (t - 6 * t3 + 8 * t4 - 3 * t5)
         + a2 * 0.5 * (t2 - 3 * t3 + 3 * t4 - t5) + b0 * (10 * t3 - 15 * t4 + 6 * t5)
         + b1 * (-4 * t3 + 7 * t4 - 3 * t5) + b2 * 0.5 * (t3 - 2 * t4 + t5);
    if (df)
        *df = (a0 * (-30 * t2 + 60 * t3 - 30 * t4) + a1 * (1 - 18 * t2 + 32 * t3 - 15 * t4)
               + a2 * 0.5 * (2 * t - 9 * t2 + 12 * t3 - 5 * t4) + b0 * (30 * t2 - 60 * t3 + 30 * t4)
               + b1 * (-12 * t2 + 28 * t3 - 15 * t4) + b2 * 0.5 * (3 * t2 - 8 * t3 + 5 * t4))
              / h;
    if (d2f)
        *d2f = (a0 * (-60 * t + 180 * t2 - 120 * t3) + a1 * (-36 * t + 96 * t2 - 60 * t3)
                + a2 * 0.5 * (2 - 18 * t + 36 * t2 - 20 * t3) + b0 * (60 * t - 180 * t2 + 120 * t3)
                + b1 * (-24 * t + 84 * t2 - 60 * t3) + b2 * 0.5 * (6 * t - 24 * t2 + 20 * t3))
               / (h * h);
}

}  // namespace axistar::numerics
