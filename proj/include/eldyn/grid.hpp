#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "eldyn/mat.hpp"
#include "eldyn/util.hpp"

namespace eldyn {

/// Uniform collocation grid on the flat torus (0,1)^d.
struct Grid {
    int d = 2;       ///< spatial dimension, 2 or 3
    int n = 32;      ///< points per axis, even and >= 4
    double t_end = 1.0;
    double dt = 1e-3;

    Grid() = default;
    Grid(int d_, int n_, double t_end_ = 1.0, double dt_ = 1e-3)
        : d(d_), n(n_), t_end(t_end_), dt(dt_) {
        validate();
    }

    void validate() const {
        require(d == 2 || d == 3, "Grid: d must be 2 or 3");
        require(n >= 4 && n % 2 == 0, "Grid: n must be even and >= 4");
        require(dt > 0.0, "Grid: dt must be positive");
    }

    std::size_t points() const {
        std::size_t p = 1;
        for (int a = 0; a < d; ++a) p *= static_cast<std::size_t>(n);
        return p;
    }
    double cell_volume() const { return 1.0 / static_cast<double>(points()); }
    double spacing() const { return 1.0 / n; }

    bool same_layout(const Grid& o) const { return d == o.d && n == o.n; }
};

enum class Rank { scalar = 0, vector = 1, matrix = 2 };

inline int components(Rank r, int d) {
    switch (r) {
        case Rank::scalar: return 1;
        case Rank::vector: return d;
        case Rank::matrix: return d * d;
    }
    return 0;
}

/// Real-valued samples on the grid, row-major over grid points with the
/// component index fastest. Matrix components are stored row-major, so
/// component i*d+a holds entry (i,a).
class PeriodicField {
public:
    PeriodicField() = default;
    PeriodicField(const Grid& g, Rank r)
        : grid_(g), rank_(r), data_(g.points() * static_cast<std::size_t>(components(r, g.d)), 0.0) {}

    const Grid& grid() const { return grid_; }
    Rank rank() const { return rank_; }
    int ncomp() const { return components(rank_, grid_.d); }
    std::size_t points() const { return grid_.points(); }

    double& at(std::size_t point, int comp) { return data_[point * ncomp() + comp]; }
    double at(std::size_t point, int comp) const { return data_[point * ncomp() + comp]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    Mat matrix_at(std::size_t point) const {
        Mat m(grid_.d);
        for (int k = 0; k < m.size(); ++k) m.v[k] = at(point, k);
        return m;
    }
    void set_matrix_at(std::size_t point, const Mat& m) {
        for (int k = 0; k < m.size(); ++k) at(point, k) = m.v[k];
    }

    PeriodicField& operator+=(const PeriodicField& o) {
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
        return *this;
    }
    PeriodicField& operator-=(const PeriodicField& o) {
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
        return *this;
    }
    PeriodicField& operator*=(double s) {
        for (double& v : data_) v *= s;
        return *this;
    }
    friend PeriodicField operator+(PeriodicField a, const PeriodicField& b) { return a += b; }
    friend PeriodicField operator-(PeriodicField a, const PeriodicField& b) { return a -= b; }
    friend PeriodicField operator*(PeriodicField a, double s) { return a *= s; }
    friend PeriodicField operator*(double s, PeriodicField a) { return a *= s; }

private:
    Grid grid_{};
    Rank rank_ = Rank::scalar;
    std::vector<double> data_;
};

/// Coordinates of grid point `p` into x[0..d-1].
inline void point_coords(const Grid& g, std::size_t p, double* x) {
    std::size_t rem = p;
    for (int a = g.d - 1; a >= 0; --a) {
        x[a] = static_cast<double>(rem % g.n) / g.n;
        rem /= static_cast<std::size_t>(g.n);
    }
}

/// Sample fn(x, comp) at every grid point.
inline PeriodicField make_field(const Grid& g, Rank r,
                                const std::function<double(const double*, int)>& fn) {
    PeriodicField f(g, r);
    double x[3];
    for (std::size_t p = 0; p < f.points(); ++p) {
        point_coords(g, p, x);
        for (int c = 0; c < f.ncomp(); ++c) f.at(p, c) = fn(x, c);
    }
    return f;
}

/// Spatial mean of one component.
inline double mean(const PeriodicField& f, int comp) {
    std::vector<double> buf(f.points());
    for (std::size_t p = 0; p < f.points(); ++p) buf[p] = f.at(p, comp);
    return pairwise_sum(buf) / static_cast<double>(f.points());
}

/// Integral over the torus of a pointwise functional of the field.
inline double integrate(const PeriodicField& f,
                        const std::function<double(const double*)>& fn) {
    std::vector<double> buf(f.points());
    std::vector<double> vals(static_cast<std::size_t>(f.ncomp()));
    for (std::size_t p = 0; p < f.points(); ++p) {
        for (int c = 0; c < f.ncomp(); ++c) vals[static_cast<std::size_t>(c)] = f.at(p, c);
        buf[p] = fn(vals.data());
    }
    return pairwise_sum(buf) * f.grid().cell_volume();
}

/// L^2(Q) norm over all components.
inline double l2_norm(const PeriodicField& f) {
    std::vector<double> buf(f.points());
    for (std::size_t p = 0; p < f.points(); ++p) {
        double s = 0.0;
        for (int c = 0; c < f.ncomp(); ++c) s += f.at(p, c) * f.at(p, c);
        buf[p] = s;
    }
    return std::sqrt(pairwise_sum(buf) * f.grid().cell_volume());
}

/// L^2 inner product <f,g> summed over components.
inline double inner(const PeriodicField& f, const PeriodicField& g) {
    require(f.grid().same_layout(g.grid()) && f.rank() == g.rank(), "inner: mismatched fields");
    std::vector<double> buf(f.points());
    for (std::size_t p = 0; p < f.points(); ++p) {
        double s = 0.0;
        for (int c = 0; c < f.ncomp(); ++c) s += f.at(p, c) * g.at(p, c);
        buf[p] = s;
    }
    return pairwise_sum(buf) * f.grid().cell_volume();
}

inline double linf_norm(const PeriodicField& f) {
    double m = 0.0;
    for (double v : f.data()) m = std::max(m, std::abs(v));
    return m;
}

inline bool all_finite(const PeriodicField& f) {
    for (double v : f.data())
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace eldyn
