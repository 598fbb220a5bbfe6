#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "eldyn/spectral.hpp"
#include "eldyn/stored_energy.hpp"

namespace eldyn {

/// Velocity u, deformation gradient F, and the zero-mean potential y with
/// grad y = F minus its constant mode. y is re-extracted from F at output
/// times rather than integrated, so the involution curl F = 0 stays exact.
struct ElastoState {
    double t = 0.0;
    PeriodicField u;  ///< vector, zero mean
    PeriodicField F;  ///< matrix, curl-free
    PeriodicField y;  ///< vector, zero mean
    Mat F_mean;       ///< constant (k=0) mode of F
};

struct SimConfig {
    std::shared_ptr<const StoredEnergy> energy;
    double epsilon = 0.0;  ///< strength of the 4th-order damping eps*(lap u - lap^2 u)
    Grid grid;
    bool dealias = true;   ///< 2/3-rule truncation of S(F); default on for p > 2
    int output_stride = 10;
};

struct SimError : public std::runtime_error {
    long step;
    SimError(const std::string& msg, long step_) : std::runtime_error(msg), step(step_) {}
};

/// Projects the mean out of u, extracts y and F_mean from F, and rejects
/// states whose curl defect exceeds 1e-9.
ElastoState make_state(PeriodicField u, PeriodicField F, double t = 0.0);

struct StateInvariants {
    double mean_u = 0.0;        ///< max |mean u_i|
    double curl = 0.0;          ///< curl_defect(F)
    double potential_gap = 0.0; ///< max |grad y + F_mean - F|
};
StateInvariants state_invariants(const ElastoState& s);

/// sqrt of the largest Hessian eigenvalue of W over the state; the
/// quasilinear wave speed entering the time step rule.
double max_wave_speed(const ElastoState& s, const StoredEnergy& w);

/// dt limit 0.5 * spacing / max_wave_speed.
double stability_dt_limit(const ElastoState& s, const StoredEnergy& w);

/// One step of classical RK4 with the stiff part -eps(4 pi^2|k|^2 +
/// 16 pi^4|k|^4) handled by its exact integrating factor per substage.
/// When `mid_u` is given it receives the third-stage velocity, a midpoint
/// value that is exact for the damped linear part; the viscous-work
/// accumulator integrates with it (Simpson).
ElastoState advance_state(const ElastoState& s, const SimConfig& cfg,
                          PeriodicField* mid_u = nullptr);

enum class InitKind { smooth_wave, laminate, random_band };
InitKind parse_init_kind(const std::string& name);

/// smooth-wave: y = a sin(2 pi x1) e1, u = 0.
/// laminate(N): grad y oscillates between (A - mean) and (B - mean) at
/// frequency N along x1 with A - B = a e1 (x) e1, smoothed transitions.
/// random-band: low-mode random y and u scaled by the amplitude.
/// All kinds return F_mean = I and zero-mean u.
ElastoState build_initial_data(InitKind kind, const Grid& g, double amplitude,
                               int laminate_freq = 4, std::uint64_t seed = 0);

struct Trajectory {
    std::vector<ElastoState> states;  ///< at output strides, y refreshed
    std::vector<double> times;
    std::vector<double> visc_grad;    ///< int |grad u|^2 per output
    std::vector<double> visc_lap;     ///< int |lap u|^2 per output
    std::vector<double> visc_work;    ///< cumulative eps-work, accumulated per step
    double max_curl_defect = 0.0;
    double max_mean_u = 0.0;
    double max_dtf_hm1 = 0.0;         ///< max H^{-1} norm of dF/dt = grad u
};

/// Advance to t_end, emitting a state every `output_stride` steps (plus the
/// initial and final states). Throws SimError with the failing step on
/// non-finite states or a violated time step rule.
Trajectory simulate(const SimConfig& cfg, const ElastoState& init);

}  // namespace eldyn
