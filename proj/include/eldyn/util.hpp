#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>

namespace eldyn {

/// Pairwise (cascade) summation. Deterministic for a fixed input order and
/// accurate to O(eps log n), which the diagnostics rely on for reproducible
/// integrals.
inline double pairwise_sum(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n <= 32) {
        double s = 0.0;
        for (double v : x) s += v;
        return s;
    }
    const std::size_t m = n / 2;
    return pairwise_sum(x.first(m)) + pairwise_sum(x.subspan(m));
}

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace eldyn
