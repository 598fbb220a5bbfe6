#pragma once

#include <array>
#include <cmath>
#include <cstddef>

#include "eldyn/util.hpp"

namespace eldyn {

/// Dense d x d matrix with d in {2,3}; the value type for deformation
/// gradients and stresses at a single point. Row-major storage, component
/// (i,a) = row i, column a.
struct Mat {
    int d = 2;
    std::array<double, 9> v{};

    Mat() = default;
    explicit Mat(int dim) : d(dim) { require(dim == 2 || dim == 3, "Mat: d must be 2 or 3"); }

    double& operator()(int i, int a) { return v[static_cast<std::size_t>(i * d + a)]; }
    double operator()(int i, int a) const { return v[static_cast<std::size_t>(i * d + a)]; }
    int size() const { return d * d; }

    static Mat zero(int d) { return Mat(d); }
    static Mat identity(int d) {
        Mat m(d);
        for (int i = 0; i < d; ++i) m(i, i) = 1.0;
        return m;
    }

    Mat& operator+=(const Mat& o) {
        for (int k = 0; k < size(); ++k) v[k] += o.v[k];
        return *this;
    }
    Mat& operator-=(const Mat& o) {
        for (int k = 0; k < size(); ++k) v[k] -= o.v[k];
        return *this;
    }
    Mat& operator*=(double s) {
        for (int k = 0; k < size(); ++k) v[k] *= s;
        return *this;
    }

    friend Mat operator+(Mat a, const Mat& b) { return a += b; }
    friend Mat operator-(Mat a, const Mat& b) { return a -= b; }
    friend Mat operator*(Mat a, double s) { return a *= s; }
    friend Mat operator*(double s, Mat a) { return a *= s; }
};

/// Frobenius inner product A:B.
inline double dot(const Mat& a, const Mat& b) {
    double s = 0.0;
    for (int k = 0; k < a.size(); ++k) s += a.v[k] * b.v[k];
    return s;
}

inline double norm(const Mat& a) { return std::sqrt(dot(a, a)); }

inline Mat transpose(const Mat& a) {
    Mat t(a.d);
    for (int i = 0; i < a.d; ++i)
        for (int j = 0; j < a.d; ++j) t(i, j) = a(j, i);
    return t;
}

inline Mat matmul(const Mat& a, const Mat& b) {
    Mat c(a.d);
    for (int i = 0; i < a.d; ++i)
        for (int j = 0; j < a.d; ++j) {
            double s = 0.0;
            for (int k = 0; k < a.d; ++k) s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    return c;
}

inline double det(const Mat& a) {
    if (a.d == 2) return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
           a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
           a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
}

/// Cofactor matrix, d(det A)/dA.
inline Mat cofactor(const Mat& a) {
    Mat c(a.d);
    if (a.d == 2) {
        c(0, 0) = a(1, 1);
        c(0, 1) = -a(1, 0);
        c(1, 0) = -a(0, 1);
        c(1, 1) = a(0, 0);
    } else {
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const int i1 = (i + 1) % 3, i2 = (i + 2) % 3;
                const int j1 = (j + 1) % 3, j2 = (j + 2) % 3;
                c(i, j) = a(i1, j1) * a(i2, j2) - a(i1, j2) * a(i2, j1);
            }
    }
    return c;
}

/// Rank-one product a (x) b of two d-vectors.
inline Mat outer(int d, const double* a, const double* b) {
    Mat m(d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m(i, j) = a[i] * b[j];
    return m;
}

}  // namespace eldyn
