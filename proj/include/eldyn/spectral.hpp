#pragma once

#include <functional>
#include <vector>

#include "eldyn/grid.hpp"
#include "eldyn/rng.hpp"

namespace eldyn {

/// Exact derivative of the trigonometric interpolant along one axis.
/// First derivatives zero the Nyquist mode (odd multiplier convention).
PeriodicField partial(const PeriodicField& f, int axis);

/// scalar -> vector, vector -> matrix with (grad u)_{ia} = d_a u_i.
/// Rejects matrix input.
PeriodicField gradient(const PeriodicField& f);

/// vector -> scalar, matrix -> vector with (div F)_i = sum_a d_a F_{ia}.
/// Rejects scalar input. With `dealias`, the input spectrum is truncated by
/// the 2/3 rule before differentiating.
PeriodicField divergence(const PeriodicField& f, bool dealias = false);

/// Componentwise spectral Laplacian (full -4 pi^2 |k|^2 symbol).
PeriodicField laplacian(const PeriodicField& f);

/// L^2 norm of all row-wise curl components d_b F_{ia} - d_a F_{ib}, a < b.
/// Zero (to spectral precision) iff F is a gradient field plus a constant.
double curl_defect(const PeriodicField& F);

struct PoissonResult {
    PeriodicField g;                  ///< unique zero-mean solution of -lap g = psi
    std::vector<double> removed_mean; ///< mean projected out of psi, per component
};

/// Spectral inversion of -lap with the k=0 mode pinned to zero. The mean of
/// psi is projected out and reported; callers warn when it exceeds 1e-10.
PoissonResult solve_poisson_zero_mean(const PeriodicField& psi);

struct HodgeParts {
    PeriodicField curl_free;  ///< gradient part, carries the constant mode
    PeriodicField div_free;
    PeriodicField potential;  ///< zero-mean z with grad z = curl_free minus its mean
};

/// Row-wise Helmholtz/Hodge projection of a matrix field.
HodgeParts hodge_decompose(const PeriodicField& V);

/// 2/3-rule truncation: zeroes every mode with some |k_a| > n/3.
PeriodicField dealias_truncate(const PeriodicField& f);

/// Multiplies every mode by fn(|k|^2), componentwise. Exact integrating
/// factors for diagonal-in-Fourier operators are built from this.
PeriodicField spectral_filter(const PeriodicField& f,
                              const std::function<double(double)>& fn);

/// H^{-1}(Q) norm (zero-mean convention; modes in the kernel of the
/// first-derivative symbol are skipped).
double h_minus1_norm(const PeriodicField& f);

/// Zero-mean Gaussian field band-limited to |k|_inf <= kmax.
PeriodicField random_band_limited(const Grid& g, Rank r, int kmax, Rng& rng);

}  // namespace eldyn
