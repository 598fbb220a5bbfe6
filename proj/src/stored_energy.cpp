#include "eldyn/stored_energy.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "eldyn/rng.hpp"

namespace eldyn {
namespace {

class Quadratic final : public StoredEnergy {
public:
    explicit Quadratic(int d) : StoredEnergy("quadratic", d, 2.0, 0.25, true) {}
    double W(const Mat& xi) const override { return 0.5 * dot(xi, xi); }
    Mat S(const Mat& xi) const override { return xi; }
    Mat DS(const Mat&, const Mat& h) const override { return h; }
};

class NegQuadratic final : public StoredEnergy {
public:
    explicit NegQuadratic(int d) : StoredEnergy("negquad", d, 2.0, std::nullopt, false) {}
    double W(const Mat& xi) const override { return -0.5 * dot(xi, xi); }
    Mat S(const Mat& xi) const override { return xi * -1.0; }
    Mat DS(const Mat&, const Mat& h) const override { return h * -1.0; }
};

/// W = 1/4 |xi^T xi - I|^2 + 1/2 |xi|^2, a St. Venant-Kirchhoff-flavoured
/// quartic with S(xi) = xi xi^T xi.
class StVkLike final : public StoredEnergy {
public:
    explicit StVkLike(int d) : StoredEnergy("stvk-like", d, 4.0, std::nullopt, true) {}
    double W(const Mat& xi) const override {
        Mat c = matmul(transpose(xi), xi) - Mat::identity(xi.d);
        return 0.25 * dot(c, c) + 0.5 * dot(xi, xi);
    }
    Mat S(const Mat& xi) const override { return matmul(xi, matmul(transpose(xi), xi)); }
    Mat DS(const Mat& xi, const Mat& h) const override {
        const Mat xt = transpose(xi);
        return matmul(h, matmul(xt, xi)) + matmul(xi, matmul(transpose(h), xi)) +
               matmul(xi, matmul(xt, h));
    }
};

/// W = 1/2 |xi|^2 + (det xi)^2 in d=2. Polyconvex, hence quasiconvex, but the
/// det^2 term gives no |xi|^4 coercivity along rank-one directions, so strong
/// quasiconvexity at p=4 is not expected.
class Polyconvex2d final : public StoredEnergy {
public:
    Polyconvex2d() : StoredEnergy("polyconvex2d", 2, 4.0, std::nullopt, false) {}
    double W(const Mat& xi) const override {
        const double j = det(xi);
        return 0.5 * dot(xi, xi) + j * j;
    }
    Mat S(const Mat& xi) const override { return xi + 2.0 * det(xi) * cofactor(xi); }
    Mat DS(const Mat& xi, const Mat& h) const override {
        const Mat cf = cofactor(xi);
        return h + 2.0 * dot(cf, h) * cf + 2.0 * det(xi) * cofactor(h);
    }
};

/// W = det xi in d=2: the null Lagrangian control. Quasiconvex (affine along
/// gradients) but not strongly so, and not coercive.
class Det2d final : public StoredEnergy {
public:
    Det2d() : StoredEnergy("det2d", 2, 2.0, std::nullopt, false) {}
    double W(const Mat& xi) const override { return det(xi); }
    Mat S(const Mat& xi) const override { return cofactor(xi); }
    Mat DS(const Mat&, const Mat& h) const override { return cofactor(h); }
};

Mat random_direction(int d, Rng& rng) {
    Mat m(d);
    double nrm = 0.0;
    do {
        for (int k = 0; k < m.size(); ++k) m.v[static_cast<std::size_t>(k)] = rng.normal();
        nrm = norm(m);
    } while (nrm < 1e-12);
    return m * (1.0 / nrm);
}

}  // namespace

double aux_v(double r, double p) { return std::sqrt(r * r + std::pow(r, p)); }

double aux_v(const Mat& xi, double p) { return aux_v(norm(xi), p); }

std::shared_ptr<const StoredEnergy> make_energy(const std::string& name, int d) {
    require(d == 2 || d == 3, "make_energy: d must be 2 or 3");
    if (name == "quadratic") return std::make_shared<Quadratic>(d);
    if (name == "negquad") return std::make_shared<NegQuadratic>(d);
    if (name == "stvk-like") return std::make_shared<StVkLike>(d);
    if (name == "polyconvex2d") {
        require(d == 2, "polyconvex2d is defined for d=2 only");
        return std::make_shared<Polyconvex2d>();
    }
    if (name == "det2d") {
        require(d == 2, "det2d is defined for d=2 only");
        return std::make_shared<Det2d>();
    }
    throw std::invalid_argument("unknown stored energy: " + name);
}

std::vector<std::string> energy_catalog() {
    return {"quadratic", "stvk-like", "polyconvex2d", "negquad", "det2d"};
}

double energy_remainder(const StoredEnergy& w, const Mat& fbar, const Mat& xi) {
    return w.W(fbar + xi) - w.W(fbar) - dot(w.S(fbar), xi);
}

Mat stress_remainder(const StoredEnergy& w, const Mat& fbar, const Mat& xi) {
    return w.S(fbar + xi) - w.S(fbar) - w.DS(fbar, xi);
}

double hessian_spectral_norm(const StoredEnergy& w, const Mat& xi) {
    const int d = xi.d;
    const int m = d * d;
    // assemble D^2W(xi) in the canonical matrix basis
    double hess[9][9];
    for (int k = 0; k < m; ++k) {
        Mat basis(d);
        basis.v[static_cast<std::size_t>(k)] = 1.0;
        const Mat col = w.DS(xi, basis);
        for (int j = 0; j < m; ++j) hess[j][k] = col.v[static_cast<std::size_t>(j)];
    }
    // cyclic Jacobi; the Hessian is symmetric so this converges fast
    for (int sweep = 0; sweep < 30; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < m; ++i)
            for (int j = i + 1; j < m; ++j) off += hess[i][j] * hess[i][j];
        if (off < 1e-28) break;
        for (int i = 0; i < m; ++i)
            for (int j = i + 1; j < m; ++j) {
                if (std::abs(hess[i][j]) < 1e-300) continue;
                const double theta = 0.5 * std::atan2(2.0 * hess[i][j], hess[j][j] - hess[i][i]);
                const double c = std::cos(theta), s = std::sin(theta);
                for (int k = 0; k < m; ++k) {
                    const double a = hess[i][k], b = hess[j][k];
                    hess[i][k] = c * a - s * b;
                    hess[j][k] = s * a + c * b;
                }
                for (int k = 0; k < m; ++k) {
                    const double a = hess[k][i], b = hess[k][j];
                    hess[k][i] = c * a - s * b;
                    hess[k][j] = s * a + c * b;
                }
            }
    }
    double mx = 0.0;
    for (int i = 0; i < m; ++i) mx = std::max(mx, std::abs(hess[i][i]));
    return mx;
}

GrowthBoundReport verify_growth_bounds(const StoredEnergy& w, double radius, int samples,
                                       std::uint64_t seed, double fbar_radius) {
    require(radius > 0.0, "verify_growth_bounds: radius must be positive");
    require(samples >= 1000, "verify_growth_bounds: need at least 1000 samples");
    const int d = w.dim();
    const double p = w.p();
    GrowthBoundReport rep;
    rep.radius = radius;
    rep.samples = samples;
    rep.coercivity_min = std::numeric_limits<double>::infinity();
    Rng rng(seed);

    const double levels[3] = {radius / 4.0, radius / 2.0, radius};
    double level_max[3] = {0.0, 0.0, 0.0};
    const int per_level = samples / 3;

    for (int lvl = 0; lvl < 3; ++lvl) {
        const double rmax = levels[lvl];
        for (int s = 0; s < per_level; ++s) {
            const Mat dir = random_direction(d, rng);
            const double r = rng.uniform(1e-6, rmax);
            const Mat xi = dir * r;
            const double wv = w.W(xi);
            const Mat sv = w.S(xi);
            const double dsn = hessian_spectral_norm(w, xi);
            if (!std::isfinite(wv) || !std::isfinite(norm(sv)) || !std::isfinite(dsn)) {
                ++rep.nonfinite_evals;
                continue;
            }
            const double rw = std::abs(wv) / (1.0 + std::pow(r, p));
            const double rs = norm(sv) / (1.0 + std::pow(r, p - 1.0));
            const double rds = dsn / (1.0 + std::pow(r, p - 1.0));

            const Mat fbar = random_direction(d, rng) * rng.uniform(0.0, fbar_radius);
            const double v2 = aux_v(xi, p) * aux_v(xi, p);
            const double rg = std::abs(energy_remainder(w, fbar, xi)) / v2;
            const double rgs = norm(stress_remainder(w, fbar, xi)) / v2;

            rep.w_over_p = std::max(rep.w_over_p, rw);
            rep.s_over_pm1 = std::max(rep.s_over_pm1, rs);
            rep.ds_over_pm1 = std::max(rep.ds_over_pm1, rds);
            rep.g_over_v2 = std::max(rep.g_over_v2, rg);
            rep.gs_over_v2 = std::max(rep.gs_over_v2, rgs);
            level_max[lvl] = std::max({level_max[lvl], rw, rs, rds, rg, rgs});

            if (r >= 1.1) {
                const double denom = std::pow(r, p) - 1.0;
                rep.coercivity_min = std::min(rep.coercivity_min, wv / denom);
            }

            const Mat eta = random_direction(d, rng) * rng.uniform(1e-6, rmax);
            const double num = std::abs(wv - w.W(eta));
            const double den =
                (1.0 + std::pow(r, p - 1.0) + std::pow(norm(eta), p - 1.0)) * norm(xi - eta);
            if (den > 1e-12)
                rep.lipschitz_frame = std::max(rep.lipschitz_frame, num / den);
        }
    }
    rep.ratios_stable =
        !(level_max[1] > 2.0 * level_max[0] && level_max[2] > 2.0 * level_max[1]);
    if (!std::isfinite(rep.coercivity_min)) rep.coercivity_min = 0.0;
    return rep;
}

std::string GrowthBoundReport::to_json() const {
    std::ostringstream os;
    os.precision(17);
    os << "{";
    os << "\"coercivity_min\": " << coercivity_min << ", ";
    os << "\"ds_over_pm1\": " << ds_over_pm1 << ", ";
    os << "\"g_over_v2\": " << g_over_v2 << ", ";
    os << "\"gs_over_v2\": " << gs_over_v2 << ", ";
    os << "\"lipschitz_frame\": " << lipschitz_frame << ", ";
    os << "\"nonfinite_evals\": " << nonfinite_evals << ", ";
    os << "\"radius\": " << radius << ", ";
    os << "\"ratios_stable\": " << (ratios_stable ? "true" : "false") << ", ";
    os << "\"s_over_pm1\": " << s_over_pm1 << ", ";
    os << "\"samples\": " << samples << ", ";
    os << "\"w_over_p\": " << w_over_p << "}";
    return os.str();
}

}  // namespace eldyn
