#pragma once
#include <memory>
#include <vector>

namespace axistar::numerics {

enum class SplineEnd { NotAKnot, Natural, ClampedZero };

/// Cubic spline machinery for a fixed knot set.  The second derivatives are
/// a precomputed linear map of the knot values, so a spline is linear in its data.
class SplineBasis {
public:
    SplineBasis(std::vector<double> knots, SplineEnd left = SplineEnd::NotAKnot,
                SplineEnd right = SplineEnd::NotAKnot);

    const std::vector<double>& knots() const { return x_; }
    int size() const { return static_cast<int>(x_.size()); }

    /// second derivatives at the knots
    std::vector<double> second_derivatives(const double* values) const;

    /// interval index containing x (clamped to the end intervals)
    int locate(double x) const;

    /// row weights w so that s(x) = sum_m w[m] v[m]; also for s' and s'' when non-null
    void weights(double x, double* w, double* dw = nullptr, double* d2w = nullptr) const;

private:
    std::vector<double> x_;
    std::vector<double> S_;  // n x n, row-major: M = S v
};

class CubicSpline {
public:
    CubicSpline() = default;
    CubicSpline(std::shared_ptr<const SplineBasis> basis, std::vector<double> values);

    double operator()(double x) const;
    void eval(double x, double* f, double* df = nullptr, double* d2f = nullptr) const;

    const std::vector<double>& values() const { return v_; }
    const SplineBasis& basis() const { return *basis_; }

private:
    std::shared_ptr<const SplineBasis> basis_;
    std::vector<double> v_, m_;
};

/// Piecewise cubic Hermite interpolant; slopes are either supplied or
/// estimated.  With `limit` set they are clipped (Fritsch-Carlson) so
/// monotone data stay monotone.
class MonotoneCubic {
public:
    MonotoneCubic() = default;
    MonotoneCubic(std::vector<double> x, std::vector<double> y, std::vector<double> dy = {}, bool limit = true);

    double operator()(double x) const;
    void eval(double x, double* f, double* df = nullptr, double* d2f = nullptr) const;
    double xmin() const { return x_.front(); }
    double xmax() const { return x_.back(); }

private:
    std::vector<double> x_, y_, d_;
};

/// C2 piecewise quintic Hermite interpolant from values, first and second derivatives
class QuinticHermite {
public:
    QuinticHermite() = default;
    QuinticHermite(std::vector<double> x, std::vector<double> y, std::vector<double> dy, std::vector<double> d2y);

    double operator()(double x) const;
    void eval(double x, double* f, double* df = nullptr, double* d2f = nullptr) const;

private:
    std::vector<double> x_, y_, d_, d2_;
};

}  // namespace axistar::numerics
