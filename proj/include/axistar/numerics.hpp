#pragma once
#include <memory>
#include <vector>

namespace axistar::numerics {

/// nodes increasing, weights positive
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const { return nodes.size(); }

    template <typename F>
    double integrate(F&& f) const {
        double sum = 0;
        for (std::size_t i = 0; i < nodes.size(); ++i)
            sum += weights[i] * f(nodes[i]);
        return sum;
    }
};

/// n-point Gauss-Legendre rule on [-1,1]; nodes are mirrored so x_i == -x_{n-1-i} bitwise
QuadratureRule gauss_legendre(int n);

/// Gauss-Legendre rule mapped to [a,b]
QuadratureRule gauss_legendre(int n, double a, double b);

/// Gauss-Jacobi rule on [0,1] with weight t^alpha (1-t)^beta
QuadratureRule gauss_jacobi(int n, double alpha, double beta = 0.0);

/// P_l(x) by the three-term recurrence
double legendre_eval(int l, double x);

/// P_0..P_lmax at x (and first/second derivatives when the pointers are non-null)
void legendre_all(int lmax, double x, double* p, double* dp = nullptr, double* d2p = nullptr);

/// Coefficients c_0..c_L from samples at the nodes of `rule` (a Gauss-Legendre rule on [-1,1])
std::vector<double> legendre_project(const std::vector<double>& samples, const QuadratureRule& rule,
                                     int L, bool even_only);

/// Samples taken at gauss_legendre(samples.size()) nodes
std::vector<double> legendre_project(const std::vector<double>& samples, int L, bool even_only);

/// Polar Gauss-Legendre nodes in cos(theta) with a precomputed P_l table.
/// When even_only is set only degrees 0,2,..,L are used.
class LegendreBasis {
public:
    LegendreBasis(int max_degree, int node_count, bool even_only = true);

    int max_degree() const { return L_; }
    int node_count() const { return static_cast<int>(rule_.size()); }
    bool even_only() const { return even_only_; }
    const QuadratureRule& rule() const { return rule_; }
    double node(int k) const { return rule_.nodes[k]; }
    double weight(int k) const { return rule_.weights[k]; }

    /// retained degrees in increasing order
    const std::vector<int>& degrees() const { return degrees_; }
    int sector_count() const { return static_cast<int>(degrees_.size()); }

    /// P_l(x_k) for the retained degree with sector index s
    double P(int s, int k) const { return table_[s * node_count() + k]; }

    /// projection onto retained sectors; result indexed by sector
    std::vector<double> forward(const double* samples) const;
    std::vector<double> forward(const std::vector<double>& samples) const { return forward(samples.data()); }

    /// values at the nodes from sector coefficients
    std::vector<double> inverse(const std::vector<double>& coeffs) const;

    /// sum_s c_s P_{l_s}(x) at arbitrary x
    double evaluate(const std::vector<double>& coeffs, double x) const;

    /// nodes with x_k >= 0 (upper half, used with reflection symmetry)
    int half_count() const { return node_count() - node_count() / 2; }
    int half_index(int j) const { return node_count() / 2 + j; }

    /// projection from upper-half samples of an even function (even_only bases)
    std::vector<double> forward_half(const double* samples) const;

private:
    int L_;
    bool even_only_;
    QuadratureRule rule_;
    std::vector<int> degrees_;
    std::vector<double> table_;
};

}  // namespace axistar::numerics
