#include "eldyn/spectral.hpp"

#include <fftw3.h>

#include <complex>
#include <map>
#include <memory>
#include <mutex>

namespace eldyn {
namespace {

constexpr double two_pi = 6.283185307179586476925286766559;

/// One FFTW plan pair per (d, n), executed through owned buffers under a
/// global lock. FFTW_ESTIMATE keeps planning deterministic.
class Transform {
public:
    Transform(int d, int n) : d_(d), n_(n) {
        npts_ = 1;
        for (int a = 0; a < d; ++a) npts_ *= static_cast<std::size_t>(n);
        nspec_ = npts_ / static_cast<std::size_t>(n) * (static_cast<std::size_t>(n) / 2 + 1);
        real_ = fftw_alloc_real(npts_);
        spec_ = fftw_alloc_complex(nspec_);
        int dims[3] = {n, n, n};
        fwd_ = fftw_plan_dft_r2c(d, dims, real_, spec_, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_c2r(d, dims, spec_, real_, FFTW_ESTIMATE);
    }
    ~Transform() {
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
        fftw_free(real_);
        fftw_free(spec_);
    }
    Transform(const Transform&) = delete;
    Transform& operator=(const Transform&) = delete;

    std::size_t spec_size() const { return nspec_; }

    void forward(const double* in, std::complex<double>* out) {
        for (std::size_t i = 0; i < npts_; ++i) real_[i] = in[i];
        fftw_execute(fwd_);
        for (std::size_t i = 0; i < nspec_; ++i)
            out[i] = {spec_[i][0], spec_[i][1]};
    }

    /// Inverse transform, normalized so backward(forward(f)) == f.
    void backward(const std::complex<double>* in, double* out) {
        for (std::size_t i = 0; i < nspec_; ++i) {
            spec_[i][0] = in[i].real();
            spec_[i][1] = in[i].imag();
        }
        fftw_execute(bwd_);
        const double scale = 1.0 / static_cast<double>(npts_);
        for (std::size_t i = 0; i < npts_; ++i) out[i] = real_[i] * scale;
    }

private:
    int d_, n_;
    std::size_t npts_, nspec_;
    double* real_;
    fftw_complex* spec_;
    fftw_plan fwd_, bwd_;
};

std::mutex g_fft_mutex;

Transform& transform_for(const Grid& g) {
    static std::map<std::pair<int, int>, std::unique_ptr<Transform>> cache;
    auto key = std::make_pair(g.d, g.n);
    auto it = cache.find(key);
    if (it == cache.end())
        it = cache.emplace(key, std::make_unique<Transform>(g.d, g.n)).first;
    return *it->second;
}

/// Signed wavenumbers of spectral index s; `kt` additionally zeroes Nyquist
/// components (the odd-derivative convention).
struct Modes {
    int k[3];
    double kt[3];
    double k2;      // |k|^2 with Nyquist kept
    double kt2;     // |k~|^2 with Nyquist zeroed
};

class SpecIndexer {
public:
    SpecIndexer(int d, int n) : d_(d), n_(n), half_(n / 2 + 1) {}
    Modes decode(std::size_t s) const {
        Modes m{};
        int idx[3] = {0, 0, 0};
        std::size_t rem = s;
        idx[d_ - 1] = static_cast<int>(rem % static_cast<std::size_t>(half_));
        rem /= static_cast<std::size_t>(half_);
        for (int a = d_ - 2; a >= 0; --a) {
            idx[a] = static_cast<int>(rem % static_cast<std::size_t>(n_));
            rem /= static_cast<std::size_t>(n_);
        }
        m.k2 = 0.0;
        m.kt2 = 0.0;
        for (int a = 0; a < d_; ++a) {
            int k = idx[a] <= n_ / 2 ? idx[a] : idx[a] - n_;
            m.k[a] = k;
            m.kt[a] = (std::abs(k) == n_ / 2) ? 0.0 : static_cast<double>(k);
            m.k2 += static_cast<double>(k) * k;
            m.kt2 += m.kt[a] * m.kt[a];
        }
        return m;
    }
    /// Parseval weight: conjugate-pair modes on the halved axis count twice.
    double weight(std::size_t s) const {
        const int last = static_cast<int>(s % static_cast<std::size_t>(half_));
        return (last == 0 || last == n_ / 2) ? 1.0 : 2.0;
    }

private:
    int d_, n_, half_;
};

using Spectrum = std::vector<std::complex<double>>;

/// Forward-transform every component of a field.
std::vector<Spectrum> to_spectrum(const PeriodicField& f) {
    auto& tr = transform_for(f.grid());
    const int nc = f.ncomp();
    std::vector<double> scratch(f.points());
    std::vector<Spectrum> out(static_cast<std::size_t>(nc), Spectrum(tr.spec_size()));
    std::lock_guard<std::mutex> lock(g_fft_mutex);
    for (int c = 0; c < nc; ++c) {
        for (std::size_t p = 0; p < f.points(); ++p) scratch[p] = f.at(p, c);
        tr.forward(scratch.data(), out[static_cast<std::size_t>(c)].data());
    }
    return out;
}

PeriodicField from_spectrum(const Grid& g, Rank r, const std::vector<Spectrum>& spec) {
    auto& tr = transform_for(g);
    PeriodicField f(g, r);
    std::vector<double> scratch(f.points());
    std::lock_guard<std::mutex> lock(g_fft_mutex);
    for (int c = 0; c < f.ncomp(); ++c) {
        tr.backward(spec[static_cast<std::size_t>(c)].data(), scratch.data());
        for (std::size_t p = 0; p < f.points(); ++p) f.at(p, c) = scratch[p];
    }
    return f;
}

void truncate_23(const Grid& g, std::vector<Spectrum>& spec) {
    const SpecIndexer ix(g.d, g.n);
    const int kcut = g.n / 3;
    const std::size_t ns = spec.front().size();
    for (std::size_t s = 0; s < ns; ++s) {
        const Modes m = ix.decode(s);
        bool kill = false;
        for (int a = 0; a < g.d; ++a)
            if (std::abs(m.k[a]) > kcut) kill = true;
        if (kill)
            for (auto& comp : spec) comp[s] = 0.0;
    }
}

}  // namespace

PeriodicField partial(const PeriodicField& f, int axis) {
    require(axis >= 0 && axis < f.grid().d, "partial: axis out of range");
    auto spec = to_spectrum(f);
    const SpecIndexer ix(f.grid().d, f.grid().n);
    for (auto& comp : spec)
        for (std::size_t s = 0; s < comp.size(); ++s) {
            const Modes m = ix.decode(s);
            comp[s] *= std::complex<double>(0.0, two_pi * m.kt[axis]);
        }
    return from_spectrum(f.grid(), f.rank(), spec);
}

PeriodicField gradient(const PeriodicField& f) {
    require(f.rank() != Rank::matrix, "gradient: matrix input not supported");
    const Grid& g = f.grid();
    const Rank out_rank = f.rank() == Rank::scalar ? Rank::vector : Rank::matrix;
    auto spec = to_spectrum(f);
    const SpecIndexer ix(g.d, g.n);
    const std::size_t ns = spec.front().size();
    std::vector<Spectrum> out(static_cast<std::size_t>(components(out_rank, g.d)), Spectrum(ns));
    for (int i = 0; i < f.ncomp(); ++i)
        for (int a = 0; a < g.d; ++a) {
            auto& dst = out[static_cast<std::size_t>(i * g.d + a)];
            const auto& src = spec[static_cast<std::size_t>(i)];
            for (std::size_t s = 0; s < ns; ++s) {
                const Modes m = ix.decode(s);
                dst[s] = src[s] * std::complex<double>(0.0, two_pi * m.kt[a]);
            }
        }
    return from_spectrum(g, out_rank, out);
}

PeriodicField divergence(const PeriodicField& f, bool dealias) {
    require(f.rank() != Rank::scalar, "divergence: scalar input not supported");
    const Grid& g = f.grid();
    const Rank out_rank = f.rank() == Rank::matrix ? Rank::vector : Rank::scalar;
    auto spec = to_spectrum(f);
    if (dealias) truncate_23(g, spec);
    const SpecIndexer ix(g.d, g.n);
    const std::size_t ns = spec.front().size();
    const int rows = components(out_rank, g.d);
    std::vector<Spectrum> out(static_cast<std::size_t>(rows), Spectrum(ns));
    for (int i = 0; i < rows; ++i)
        for (std::size_t s = 0; s < ns; ++s) {
            const Modes m = ix.decode(s);
            std::complex<double> acc = 0.0;
            for (int a = 0; a < g.d; ++a)
                acc += spec[static_cast<std::size_t>(i * g.d + a)][s] *
                       std::complex<double>(0.0, two_pi * m.kt[a]);
            out[static_cast<std::size_t>(i)][s] = acc;
        }
    return from_spectrum(g, out_rank, out);
}

PeriodicField laplacian(const PeriodicField& f) {
    auto spec = to_spectrum(f);
    const SpecIndexer ix(f.grid().d, f.grid().n);
    for (auto& comp : spec)
        for (std::size_t s = 0; s < comp.size(); ++s)
            comp[s] *= -two_pi * two_pi * ix.decode(s).k2;
    return from_spectrum(f.grid(), f.rank(), spec);
}

double curl_defect(const PeriodicField& F) {
    require(F.rank() == Rank::matrix, "curl_defect: matrix input required");
    const Grid& g = F.grid();
    auto spec = to_spectrum(F);
    const SpecIndexer ix(g.d, g.n);
    const std::size_t ns = spec.front().size();
    // Parseval over all rows i and axis pairs a < b of d_b F_{ia} - d_a F_{ib}.
    double total = 0.0;
    for (std::size_t s = 0; s < ns; ++s) {
        const Modes m = ix.decode(s);
        const double w = ix.weight(s);
        double acc = 0.0;
        for (int i = 0; i < g.d; ++i)
            for (int a = 0; a < g.d; ++a)
                for (int b = a + 1; b < g.d; ++b) {
                    const std::complex<double> c =
                        spec[static_cast<std::size_t>(i * g.d + a)][s] * (two_pi * m.kt[b]) -
                        spec[static_cast<std::size_t>(i * g.d + b)][s] * (two_pi * m.kt[a]);
                    acc += std::norm(c);
                }
        total += w * acc;
    }
    const double npts = static_cast<double>(F.points());
    return std::sqrt(total) / npts;
}

PoissonResult solve_poisson_zero_mean(const PeriodicField& psi) {
    require(psi.rank() != Rank::matrix, "solve_poisson_zero_mean: scalar or vector input required");
    const Grid& g = psi.grid();
    auto spec = to_spectrum(psi);
    const SpecIndexer ix(g.d, g.n);
    const double npts = static_cast<double>(psi.points());
    PoissonResult res;
    res.removed_mean.resize(static_cast<std::size_t>(psi.ncomp()));
    for (int c = 0; c < psi.ncomp(); ++c) {
        auto& comp = spec[static_cast<std::size_t>(c)];
        res.removed_mean[static_cast<std::size_t>(c)] = comp[0].real() / npts;
        comp[0] = 0.0;
        for (std::size_t s = 1; s < comp.size(); ++s) {
            const Modes m = ix.decode(s);
            comp[s] /= two_pi * two_pi * m.k2;
        }
    }
    res.g = from_spectrum(g, psi.rank(), spec);
    return res;
}

HodgeParts hodge_decompose(const PeriodicField& V) {
    require(V.rank() == Rank::matrix, "hodge_decompose: matrix input required");
    const Grid& g = V.grid();
    auto spec = to_spectrum(V);
    const SpecIndexer ix(g.d, g.n);
    const std::size_t ns = spec.front().size();
    std::vector<Spectrum> curl_s(static_cast<std::size_t>(g.d * g.d), Spectrum(ns));
    std::vector<Spectrum> div_s(static_cast<std::size_t>(g.d * g.d), Spectrum(ns));
    std::vector<Spectrum> pot_s(static_cast<std::size_t>(g.d), Spectrum(ns));
    for (std::size_t s = 0; s < ns; ++s) {
        const Modes m = ix.decode(s);
        for (int i = 0; i < g.d; ++i) {
            if (s == 0) {
                // constant mode goes to the curl-free part, potential stays zero-mean
                for (int a = 0; a < g.d; ++a)
                    curl_s[static_cast<std::size_t>(i * g.d + a)][0] =
                        spec[static_cast<std::size_t>(i * g.d + a)][0];
                continue;
            }
            if (m.kt2 == 0.0) {
                // pure-Nyquist content is outside the gradient range; divergence-free bucket
                for (int a = 0; a < g.d; ++a)
                    div_s[static_cast<std::size_t>(i * g.d + a)][s] =
                        spec[static_cast<std::size_t>(i * g.d + a)][s];
                continue;
            }
            std::complex<double> kdotv = 0.0;
            for (int a = 0; a < g.d; ++a)
                kdotv += m.kt[a] * spec[static_cast<std::size_t>(i * g.d + a)][s];
            for (int a = 0; a < g.d; ++a) {
                const std::complex<double> proj = m.kt[a] * kdotv / m.kt2;
                curl_s[static_cast<std::size_t>(i * g.d + a)][s] = proj;
                div_s[static_cast<std::size_t>(i * g.d + a)][s] =
                    spec[static_cast<std::size_t>(i * g.d + a)][s] - proj;
            }
            pot_s[static_cast<std::size_t>(i)][s] =
                kdotv / (std::complex<double>(0.0, two_pi) * m.kt2);
        }
    }
    HodgeParts parts;
    parts.curl_free = from_spectrum(g, Rank::matrix, curl_s);
    parts.div_free = from_spectrum(g, Rank::matrix, div_s);
    parts.potential = from_spectrum(g, Rank::vector, pot_s);
    return parts;
}

PeriodicField dealias_truncate(const PeriodicField& f) {
    auto spec = to_spectrum(f);
    truncate_23(f.grid(), spec);
    return from_spectrum(f.grid(), f.rank(), spec);
}

PeriodicField spectral_filter(const PeriodicField& f,
                              const std::function<double(double)>& fn) {
    auto spec = to_spectrum(f);
    const SpecIndexer ix(f.grid().d, f.grid().n);
    const std::size_t ns = spec.front().size();
    std::vector<double> factor(ns);
    for (std::size_t s = 0; s < ns; ++s) factor[s] = fn(ix.decode(s).k2);
    for (auto& comp : spec)
        for (std::size_t s = 0; s < ns; ++s) comp[s] *= factor[s];
    return from_spectrum(f.grid(), f.rank(), spec);
}

double h_minus1_norm(const PeriodicField& f) {
    auto spec = to_spectrum(f);
    const SpecIndexer ix(f.grid().d, f.grid().n);
    const double npts = static_cast<double>(f.points());
    double total = 0.0;
    for (const auto& comp : spec)
        for (std::size_t s = 1; s < comp.size(); ++s) {
            const Modes m = ix.decode(s);
            if (m.kt2 == 0.0) continue;
            total += ix.weight(s) * std::norm(comp[s]) / (two_pi * two_pi * m.kt2);
        }
    return std::sqrt(total) / npts;
}

PeriodicField random_band_limited(const Grid& g, Rank r, int kmax, Rng& rng) {
    require(kmax >= 1 && kmax <= g.n / 2, "random_band_limited: kmax out of range");
    PeriodicField noise(g, r);
    for (double& v : noise.data()) v = rng.normal();
    auto spec = to_spectrum(noise);
    const SpecIndexer ix(g.d, g.n);
    for (auto& comp : spec) {
        comp[0] = 0.0;
        for (std::size_t s = 1; s < comp.size(); ++s) {
            const Modes m = ix.decode(s);
            bool keep = true;
            for (int a = 0; a < g.d; ++a)
                if (std::abs(m.k[a]) > kmax) keep = false;
            if (!keep) comp[s] = 0.0;
        }
    }
    return from_spectrum(g, r, spec);
}

}  // namespace eldyn
