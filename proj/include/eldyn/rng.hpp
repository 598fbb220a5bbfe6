#pragma once

#include <cmath>
#include <cstdint>

namespace eldyn {

/// Splittable 64-bit generator (splitmix64). All stochastic components take
/// one of these explicitly; identical seeds give identical streams on every
/// platform, which the reproducibility contract requires.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0,1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in [a,b).
    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    /// Standard normal via Box-Muller (no cached spare; keeps splits simple).
    double normal() {
        double u1 = uniform();
        while (u1 == 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    /// Independent child stream; decorrelates restarts and sweeps.
    Rng split() { return Rng(next_u64() ^ 0xd1b54a32d192ed03ull); }

private:
    std::uint64_t state_;
};

}  // namespace eldyn
