#pragma once
#include <array>
#include <functional>
#include <memory>
#include <vector>

#include "axistar/geometry.hpp"
#include "axistar/numerics.hpp"
#include "axistar/profiles.hpp"
#include "axistar/spherical.hpp"

namespace axistar::field {

using geometry::Mat3;
using geometry::Vec3;

/// Composite Gauss-Legendre panels on [0, R]; samples live at the panel nodes.
class RadialPanels {
public:
    RadialPanels(std::vector<double> breaks, int q);
    /// [0,0.8] by 0.05, [0.8,1.2] by 0.0125, [1.2,2] by 0.1; q = 6
    static std::shared_ptr<const RadialPanels> standard();

    int panel_count() const { return static_cast<int>(breaks_.size()) - 1; }
    int q() const { return q_; }
    int node_count() const { return panel_count() * q_; }
    double r_max() const { return breaks_.back(); }
    double a(int p) const { return breaks_[p]; }
    double b(int p) const { return breaks_[p + 1]; }
    const std::vector<double>& breaks() const { return breaks_; }
    double node(int i) const { return nodes_[i]; }
    double weight(int i) const { return weights_[i]; }
    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& weights() const { return weights_; }

    /// panel containing r (clamped)
    int panel_of(double r) const;
    /// Lagrange basis of panel p at r
    void lagrange(int p, double r, double* ell) const;
    /// first-panel monomial coefficients: ell_i(s) = sum_m C[i*q+m] (s/b0)^m
    const std::vector<double>& first_panel_monomials() const { return mono_; }

private:
    std::vector<double> breaks_;
    int q_;
    std::vector<double> nodes_, weights_, ref_;  // ref_: nodes on [0,1]
    std::vector<double> mono_;
};

/// Axisymmetric, reflection-symmetric samples on (radial nodes) x (upper-half
/// polar nodes) and their even Legendre moments.
class AxiField {
public:
    AxiField(std::shared_ptr<const RadialPanels> panels, std::shared_ptr<const numerics::LegendreBasis> polar,
             std::vector<double> values);
    static AxiField from_function(std::shared_ptr<const RadialPanels> panels,
                                  std::shared_ptr<const numerics::LegendreBasis> polar,
                                  const std::function<double(double r, double c)>& f);
    static AxiField from_moments(std::shared_ptr<const RadialPanels> panels,
                                 std::shared_ptr<const numerics::LegendreBasis> polar, std::vector<double> moments);

    const RadialPanels& panels() const { return *panels_; }
    const std::shared_ptr<const RadialPanels>& panels_ptr() const { return panels_; }
    const numerics::LegendreBasis& polar() const { return *polar_; }
    const std::shared_ptr<const numerics::LegendreBasis>& polar_ptr() const { return polar_; }
    int radial_count() const { return panels_->node_count(); }
    int polar_count() const { return polar_->half_count(); }
    int sectors() const { return polar_->sector_count(); }

    /// cos(theta) of upper-half polar node j
    double cos_node(int j) const { return polar_->node(polar_->half_index(j)); }
    double value(int i, int j) const { return values_[i * polar_count() + j]; }
    const std::vector<double>& values() const { return values_; }
    /// moments sector-major: moment(s, i) is the degree-2s coefficient at radial node i
    double moment(int s, int i) const { return moments_[s * radial_count() + i]; }
    const std::vector<double>& moments() const { return moments_; }

    /// max |values - inverse(moments)|
    double reconstruction_error() const;
    /// 4 pi int r^2 sigma_0 dr
    double mass() const;

private:
    std::shared_ptr<const RadialPanels> panels_;
    std::shared_ptr<const numerics::LegendreBasis> polar_;
    std::vector<double> values_, moments_;
};

/// rho(y) = h(gamma, r(y), U0(g^{-1}(y))) on the field grid
AxiField density_from_state(double gamma, const geometry::DeformationField& field, const spherical::RadialState& base,
                            const profiles::DensityIntegrals& profiles, std::shared_ptr<const RadialPanels> panels,
                            std::shared_ptr<const numerics::LegendreBasis> polar);

/// V(x) = -int sigma(y)/|x-y| dy by the multipole expansion over the even moments
class PotentialField {
public:
    explicit PotentialField(const AxiField& density);

    double total_mass() const { return mass_; }
    int sectors() const { return S_; }

    double value(const Vec3& x) const;
    Vec3 grad(const Vec3& x) const;
    Mat3 hessian(const Vec3& x) const;
    void eval(const Vec3& x, double* v, Vec3* g, Mat3* h) const;

    /// radial factor R_l and derivatives for sector s; V = sum_s k_s R_s(r) P_{2s}(c), k_s = -4 pi/(4s+1)
    void radial(int s, double r, double* R, double* dR, double* d2R) const;
    /// A_l(r) = int_0^r s^{l+2} sigma_l, B_l(r) = int_r^R s^{1-l} sigma_l
    void integrals(int s, double r, double* A, double* B) const;

    /// V, dV/dr, dV/dc and second derivatives in (r, c)
    struct Meridional {
        double v = 0, vr = 0, vc = 0, vrr = 0, vrc = 0, vcc = 0;
    };
    Meridional meridional(double r, double c, int order) const;

    /// Precomputed evaluation weights for repeated potential values at fixed
    /// points with different densities on the same grid (Jacobian columns).
    class Probe {
    public:
        Probe(std::shared_ptr<const RadialPanels> panels, int sectors, const std::vector<Vec3>& points);
        int size() const { return static_cast<int>(r_.size()); }
        /// V at every probe point for the density with the given moments (sector-major)
        void values(const std::vector<double>& moments, double* out) const;
        /// V(0) for the same moments
        double origin(const std::vector<double>& moments) const;

    private:
        std::shared_ptr<const RadialPanels> panels_;
        int S_;
        std::vector<double> r_;
        std::vector<int> panel_;
        std::vector<double> pl_;            // points x S
        std::vector<double> alpha_, beta_;  // points x S x q (scaled)
        std::vector<double> afull_, bfull_; // S x nodes: full-panel weights
        std::vector<double> b0_;            // q: first-panel weights of B_0(0)
    };

private:
    std::shared_ptr<const RadialPanels> panels_;
    int S_;
    std::vector<double> sigma_;     // S x nodes
    std::vector<double> acum_;      // S x (panels+1): int over panels < p
    std::vector<double> bsuf_;      // S x (panels+1): int over panels >= p
    double mass_ = 0;
    numerics::QuadratureRule sub_;  // rule for partial panels on [0,1]

    void partial(int p, double r, int S, std::vector<double>& alpha, std::vector<double>& beta) const;
};

double potential_eval(const PotentialField& pot, const Vec3& x);
Vec3 potential_grad(const PotentialField& pot, const Vec3& x);
Mat3 potential_hessian(const PotentialField& pot, const Vec3& x);
PotentialField solve_potential(const AxiField& density);

}  // namespace axistar::field
