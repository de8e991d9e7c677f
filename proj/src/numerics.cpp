#include "axistar/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace axistar::numerics {

namespace {

// P_n and P_n' at x
void legendre_pair(int n, double x, double& p, double& dp)
{
    double p0 = 1, p1 = x;
    if (n == 0) { p = 1; dp = 0; return; }
    for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    p = p1;
    dp = n * (x * p1 - p0) / (x * x - 1);
}

// Jacobi P_n^{(a,b)} on [-1,1] and its derivative
void jacobi_pair(int n, double a, double b, double x, double& p, double& dp, double& pm1)
{
    double p0 = 1;
    double p1 = (a + 1) + (a + b + 2) * (x - 1) / 2;
    if (n == 0) { p = 1; dp = 0; pm1 = 0; return; }
    for (int k = 2; k <= n; ++k) {
        double c = 2 * k + a + b;
        double a1 = 2 * k * (k + a + b) * (c - 2);
        double a2 = (c - 1) * (a * a - b * b);
        double a3 = (c - 2) * (c - 1) * c;
        double a4 = 2 * (k + a - 1) * (k + b - 1) * c;
        double p2 = ((a2 + a3 * x) * p1 - a4 * p0) / a1;
        p0 = p1;
        p1 = p2;
    }
    p = p1;
    pm1 = p0;
    double c = 2 * n + a + b;
    dp = (n * (a - b - c * x) * p1 + 2 * (n + a) * (n + b) * p0) / (c * (1 - x * x));
}

}  // namespace

QuadratureRule gauss_legendre(int n)
{
    if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
    QuadratureRule q;
    q.nodes.resize(n);
    q.weights.resize(n);
    int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double p = 0, dp = 0;
        for (int it = 0; it < 100; ++it) {
            legendre_pair(n, x, p, dp);
            double dx = p / dp;
            x -= dx;
            if (std::fabs(dx) < 1e-16) break;
        }
        legendre_pair(n, x, p, dp);
        if (2 * i + 1 == n) x = 0;
        double w = 2 / ((1 - x * x) * dp * dp);
        q.nodes[n - 1 - i] = x;
        q.nodes[i] = -x;
        q.weights[i] = q.weights[n - 1 - i] = w;
    }
    return q;
}

QuadratureRule gauss_legendre(int n, double a, double b)
{
    QuadratureRule q = gauss_legendre(n);
    double c = (a + b) / 2, h = (b - a) / 2;
    for (int i = 0; i < n; ++i) {
        q.nodes[i] = c + h * q.nodes[i];
        q.weights[i] *= h;
    }
    return q;
}

QuadratureRule gauss_jacobi(int n, double alpha, double beta)
{
    if (n < 1) throw std::invalid_argument("gauss_jacobi: n must be positive");
    if (!(alpha > -1) || !(beta > -1))
        throw std::invalid_argument("gauss_jacobi: exponents must exceed -1");
    // t = (1+x)/2 maps the weight (1-x)^beta (1+x)^alpha on [-1,1]
    const double a = beta, b = alpha;
    std::vector<double> x(n);
    for (int k = 0; k < n; ++k) {
        double theta = (k + 1 + a / 2 - 0.25) * std::numbers::pi / (n + (a + b + 1) / 2);
        double z = std::cos(theta);
        for (int it = 0; it < 200; ++it) {
            double p, dp, pm1;
            jacobi_pair(n, a, b, z, p, dp, pm1);
            double defl = 0;
            for (int j = 0; j < k; ++j) defl += 1 / (z - x[j]);
            double dz = p / (dp - p * defl);
            double znew = z - dz;
            if (znew >= 1) znew = (z + 1) / 2;
            if (znew <= -1) znew = (z - 1) / 2;
            z = znew;
            if (std::fabs(dz) < 1e-16 * std::max(1.0, std::fabs(z))) break;
        }
        x[k] = z;
    }
    std::sort(x.begin(), x.end());
    double logc = std::lgamma(n + a + 1) + std::lgamma(n + b + 1) - std::lgamma(n + a + b + 1)
                  - std::lgamma(n + 1.0);
    QuadratureRule q;
    q.nodes.resize(n);
    q.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double p, dp, pm1;
        jacobi_pair(n, a, b, x[i], p, dp, pm1);
        // weight on [-1,1] times 2^{-(a+b+1)} for the map to [0,1]
        double w = std::exp(logc) / ((1 - x[i] * x[i]) * dp * dp);
        q.nodes[i] = (1 + x[i]) / 2;
        q.weights[i] = w;
    }
    return q;
}

double legendre_eval(int l, double x)
{
    if (l < 0) throw std::invalid_argument("legendre_eval: negative degree");
    double p0 = 1, p1 = x;
    if (l == 0) return 1;
    for (int k = 2; k <= l; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    return p1;
}

void legendre_all(int lmax, double x, double* p, double* dp, double* d2p)
{
    p[0] = 1;
    if (dp) dp[0] = 0;
    if (d2p) d2p[0] = 0;
    if (lmax == 0) return;
    p[1] = x;
    if (dp) dp[1] = 1;
    if (d2p) d2p[1] = 0;
    for (int k = 1; k < lmax; ++k) {
        p[k + 1] = ((2 * k + 1) * x * p[k] - k * p[k - 1]) / (k + 1);
        if (dp) dp[k + 1] = dp[k - 1] + (2 * k + 1) * p[k];
        if (d2p) d2p[k + 1] = d2p[k - 1] + (2 * k + 1) * dp[k];
    }
}

std::vector<double> legendre_project(const std::vector<double>& samples, const QuadratureRule& rule,
                                     int L, bool even_only)
{
    if (L < 0) throw std::invalid_argument("legendre_project: negative degree");
    if (samples.size() != rule.size())
        throw std::invalid_argument("legendre_project: sample count does not match the rule");
    if (static_cast<int>(samples.size()) < L + 1)
        throw std::invalid_argument("legendre_project: insufficient sample count");
    std::vector<double> c(L + 1, 0.0), p(L + 1);
    for (std::size_t k = 0; k < samples.size(); ++k) {
        legendre_all(L, rule.nodes[k], p.data());
        for (int l = 0; l <= L; ++l)
            if (!even_only || l % 2 == 0) c[l] += rule.weights[k] * samples[k] * p[l];
    }
    for (int l = 0; l <= L; ++l) c[l] *= (2 * l + 1) / 2.0;
    return c;
}

std::vector<double> legendre_project(const std::vector<double>& samples, int L, bool even_only)
{
    if (static_cast<int>(samples.size()) < L + 1)
        throw std::invalid_argument("legendre_project: insufficient sample count");
    return legendre_project(samples, gauss_legendre(static_cast<int>(samples.size())), L, even_only);
}

LegendreBasis::LegendreBasis(int max_degree, int node_count, bool even_only)
    : L_(max_degree), even_only_(even_only)
{
    if (max_degree < 0) throw std::invalid_argument("LegendreBasis: negative degree");
    if (even_only && max_degree % 2 != 0)
        throw std::invalid_argument("LegendreBasis: max degree must be even");
    if (node_count < max_degree + 1)
        throw std::invalid_argument("LegendreBasis: insufficient node count");
    rule_ = gauss_legendre(node_count);
    for (int l = 0; l <= L_; l += even_only ? 2 : 1) degrees_.push_back(l);
    table_.resize(degrees_.size() * node_count);
    std::vector<double> p(L_ + 1);
    for (int k = 0; k < node_count; ++k) {
        legendre_all(L_, rule_.nodes[k], p.data());
        for (std::size_t s = 0; s < degrees_.size(); ++s) table_[s * node_count + k] = p[degrees_[s]];
    }
}

std::vector<double> LegendreBasis::forward(const double* samples) const
{
    int n = node_count();
    std::vector<double> c(degrees_.size(), 0.0);
    for (std::size_t s = 0; s < degrees_.size(); ++s) {
        double sum = 0;
        for (int k = 0; k < n; ++k) sum += rule_.weights[k] * samples[k] * table_[s * n + k];
        c[s] = sum * (2 * degrees_[s] + 1) / 2.0;
    }
    return c;
}

std::vector<double> LegendreBasis::forward_half(const double* samples) const
{
    if (!even_only_) throw std::logic_error("LegendreBasis::forward_half needs an even-only basis");
    int n = node_count(), h = half_count();
    std::vector<double> c(degrees_.size(), 0.0);
    for (std::size_t s = 0; s < degrees_.size(); ++s) {
        double sum = 0;
        for (int j = 0; j < h; ++j) {
            int k = half_index(j);
            double w = (2 * k + 1 == n) ? rule_.weights[k] : 2 * rule_.weights[k];
            sum += w * samples[j] * table_[s * n + k];
        }
        c[s] = sum * (2 * degrees_[s] + 1) / 2.0;
    }
    return c;
}

std::vector<double> LegendreBasis::inverse(const std::vector<double>& coeffs) const
{
    int n = node_count();
    std::vector<double> v(n, 0.0);
    for (std::size_t s = 0; s < degrees_.size(); ++s)
        for (int k = 0; k < n; ++k) v[k] += coeffs[s] * table_[s * n + k];
    return v;
}

double LegendreBasis::evaluate(const std::vector<double>& coeffs, double x) const
{
    std::vector<double> p(L_ + 1);
    legendre_all(L_, x, p.data());
    double sum = 0;
    for (std::size_t s = 0; s < degrees_.size(); ++s) sum += coeffs[s] * p[degrees_[s]];
    return sum;
}

}  // namespace axistar::numerics
