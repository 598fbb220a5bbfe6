#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "eldyn/mat.hpp"

namespace eldyn {

/// Auxiliary weight V(xi) = (|xi|^2 + |xi|^p)^{1/2} for a matrix argument.
double aux_v(const Mat& xi, double p);
/// Same weight as a function of |xi| (vector and scalar arguments).
double aux_v(double r, double p);

/// A stored-energy model with analytic first and second derivatives.
/// Evaluation hooks must be pure and reentrant.
class StoredEnergy {
public:
    StoredEnergy(std::string name, int d, double p, std::optional<double> c0,
                 bool strongly_qc_expected)
        : name_(std::move(name)), d_(d), p_(p), c0_candidate_(c0),
          strongly_qc_expected_(strongly_qc_expected) {
        require(p >= 2.0, "StoredEnergy: growth exponent p must be >= 2");
    }
    virtual ~StoredEnergy() = default;

    const std::string& name() const { return name_; }
    int dim() const { return d_; }
    double p() const { return p_; }
    std::optional<double> c0_candidate() const { return c0_candidate_; }
    bool strongly_qc_expected() const { return strongly_qc_expected_; }

    virtual double W(const Mat& xi) const = 0;
    virtual Mat S(const Mat& xi) const = 0;           ///< S = DW
    virtual Mat DS(const Mat& xi, const Mat& h) const = 0;  ///< D^2W(xi)[h]

private:
    std::string name_;
    int d_;
    double p_;
    std::optional<double> c0_candidate_;
    bool strongly_qc_expected_;
};

/// Catalog entries: quadratic, stvk-like, polyconvex2d, negquad, det2d.
/// polyconvex2d and det2d require d == 2.
std::shared_ptr<const StoredEnergy> make_energy(const std::string& name, int d);
std::vector<std::string> energy_catalog();

/// G(Fbar, xi) = W(Fbar + xi) - W(Fbar) - S(Fbar) : xi.
double energy_remainder(const StoredEnergy& w, const Mat& fbar, const Mat& xi);

/// G_S(Fbar, xi) = S(Fbar + xi) - S(Fbar) - DS(Fbar)[xi].
Mat stress_remainder(const StoredEnergy& w, const Mat& fbar, const Mat& xi);

/// Empirical constants from a random sweep up to |xi| <= radius; each value is
/// a "no violation found up to this radius" bound, not a proof.
struct GrowthBoundReport {
    double w_over_p = 0.0;         ///< max |W(xi)| / (1 + |xi|^p)
    double s_over_pm1 = 0.0;       ///< max |S(xi)| / (1 + |xi|^{p-1})
    double ds_over_pm1 = 0.0;      ///< max op-norm D^2W(xi) / (1 + |xi|^{p-1})
    double g_over_v2 = 0.0;        ///< max |G(Fbar,xi)| / |V(xi)|^2
    double gs_over_v2 = 0.0;       ///< max |G_S(Fbar,xi)| / |V(xi)|^2
    double lipschitz_frame = 0.0;  ///< max |W(xi)-W(eta)| / ((1+|xi|^{p-1}+|eta|^{p-1})|xi-eta|)
    double coercivity_min = 0.0;   ///< min W(xi)/(|xi|^p - 1) over sampled |xi| >= 1.1
    bool ratios_stable = true;     ///< false if the maxima keep doubling across radius levels
    int nonfinite_evals = 0;       ///< (H1) failures
    double radius = 0.0;
    int samples = 0;
    std::string to_json() const;   ///< flat {constant_name: value} object
};

GrowthBoundReport verify_growth_bounds(const StoredEnergy& w, double radius, int samples,
                                       std::uint64_t seed, double fbar_radius = 2.0);

/// Largest |eigenvalue| of the symmetric Hessian D^2W(xi) (acting on d x d
/// matrices), used by the simulator's wave-speed estimate.
double hessian_spectral_norm(const StoredEnergy& w, const Mat& xi);

}  // namespace eldyn
