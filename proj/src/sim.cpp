#include "eldyn/sim.hpp"

#include <cmath>
#include <limits>

#include "eldyn/rng.hpp"

namespace eldyn {
namespace {

constexpr double two_pi = 6.283185307179586476925286766559;

PeriodicField stress_field(const PeriodicField& F, const StoredEnergy& w) {
    PeriodicField s(F.grid(), Rank::matrix);
    for (std::size_t p = 0; p < F.points(); ++p)
        s.set_matrix_at(p, w.S(F.matrix_at(p)));
    return s;
}

struct Rhs {
    PeriodicField du;  // div S(F)
    PeriodicField dF;  // grad u
};

Rhs eval_rhs(const PeriodicField& u, const PeriodicField& F, const SimConfig& cfg) {
    Rhs r{divergence(stress_field(F, *cfg.energy), cfg.dealias), gradient(u)};
    return r;
}

void project_zero_mean(PeriodicField& f) {
    for (int c = 0; c < f.ncomp(); ++c) {
        const double m = mean(f, c);
        for (std::size_t p = 0; p < f.points(); ++p) f.at(p, c) -= m;
    }
}

}  // namespace

ElastoState make_state(PeriodicField u, PeriodicField F, double t) {
    require(u.rank() == Rank::vector && F.rank() == Rank::matrix, "make_state: ranks (vector, matrix) required");
    require(u.grid().same_layout(F.grid()), "make_state: grid mismatch");
    project_zero_mean(u);
    const double cd = curl_defect(F);
    if (cd > 1e-9)
        throw SimError("initial deformation gradient is not curl-free (defect " +
                           std::to_string(cd) + ")", 0);
    ElastoState s;
    s.t = t;
    s.u = std::move(u);
    s.F = std::move(F);
    s.F_mean = Mat(s.F.grid().d);
    for (int k = 0; k < s.F_mean.size(); ++k)
        s.F_mean.v[static_cast<std::size_t>(k)] = mean(s.F, k);
    s.y = hodge_decompose(s.F).potential;
    return s;
}

StateInvariants state_invariants(const ElastoState& s) {
    StateInvariants inv;
    for (int c = 0; c < s.u.ncomp(); ++c)
        inv.mean_u = std::max(inv.mean_u, std::abs(mean(s.u, c)));
    inv.curl = curl_defect(s.F);
    PeriodicField gy = gradient(s.y);
    double gap = 0.0;
    for (std::size_t p = 0; p < gy.points(); ++p)
        for (int k = 0; k < gy.ncomp(); ++k)
            gap = std::max(gap, std::abs(gy.at(p, k) + s.F_mean.v[static_cast<std::size_t>(k)] -
                                         s.F.at(p, k)));
    inv.potential_gap = gap;
    return inv;
}

double max_wave_speed(const ElastoState& s, const StoredEnergy& w) {
    double h2 = 0.0;
    for (std::size_t p = 0; p < s.F.points(); ++p)
        h2 = std::max(h2, hessian_spectral_norm(w, s.F.matrix_at(p)));
    return std::sqrt(h2);
}

double stability_dt_limit(const ElastoState& s, const StoredEnergy& w) {
    const double c = max_wave_speed(s, w);
    if (c == 0.0) return std::numeric_limits<double>::infinity();
    return 0.5 * s.F.grid().spacing() / c;
}

ElastoState advance_state(const ElastoState& s, const SimConfig& cfg, PeriodicField* mid_u) {
    const double dt = cfg.grid.dt;
    const double eps = cfg.epsilon;

    auto damp_field = [&](const PeriodicField& f, double tau) -> PeriodicField {
        if (eps == 0.0 || tau == 0.0) return f;
        return spectral_filter(f, [&](double k2) {
            const double l = eps * (two_pi * two_pi * k2 +
                                    two_pi * two_pi * two_pi * two_pi * k2 * k2);
            return std::exp(-l * tau);
        });
    };

    const Rhs g1 = eval_rhs(s.u, s.F, cfg);

    const PeriodicField u2 = damp_field(s.u + g1.du * (dt / 2.0), dt / 2.0);
    const PeriodicField f2 = s.F + g1.dF * (dt / 2.0);
    const Rhs g2 = eval_rhs(u2, f2, cfg);

    const PeriodicField u_half = damp_field(s.u, dt / 2.0);
    const PeriodicField u3 = u_half + g2.du * (dt / 2.0);
    const PeriodicField f3 = s.F + g2.dF * (dt / 2.0);
    if (mid_u) *mid_u = u3;
    const Rhs g3 = eval_rhs(u3, f3, cfg);

    const PeriodicField u_full = damp_field(s.u, dt);
    const PeriodicField u4 = u_full + damp_field(g3.du, dt / 2.0) * dt;
    const PeriodicField f4 = s.F + g3.dF * dt;
    const Rhs g4 = eval_rhs(u4, f4, cfg);

    ElastoState out;
    out.t = s.t + dt;
    out.u = u_full + (damp_field(g1.du, dt) + damp_field((g2.du + g3.du) * 2.0, dt / 2.0) +
                      g4.du) * (dt / 6.0);
    out.F = s.F + (g1.dF + g2.dF * 2.0 + g3.dF * 2.0 + g4.dF) * (dt / 6.0);
    out.y = s.y;          // refreshed at output times
    out.F_mean = s.F_mean;  // grad u has zero mean, the constant mode is static
    return out;
}

InitKind parse_init_kind(const std::string& name) {
    if (name == "smooth-wave") return InitKind::smooth_wave;
    if (name == "laminate") return InitKind::laminate;
    if (name == "random-band") return InitKind::random_band;
    throw std::invalid_argument("unknown init.kind: " + name);
}

ElastoState build_initial_data(InitKind kind, const Grid& g, double amplitude,
                               int laminate_freq, std::uint64_t seed) {
    PeriodicField u(g, Rank::vector);
    PeriodicField y(g, Rank::vector);

    switch (kind) {
        case InitKind::smooth_wave: {
            y = make_field(g, Rank::vector, [amplitude](const double* x, int c) {
                return c == 0 ? amplitude * std::sin(two_pi * x[0]) : 0.0;
            });
            break;
        }
        case InitKind::laminate: {
            require(laminate_freq >= 1 && laminate_freq <= g.n / 4,
                    "laminate frequency must satisfy 1 <= N <= n/4");
            // profile chi in [0,1] with plateaus of width ~1/2 and smoothed
            // transitions; chi(s) + chi(s+1/2) = 1, so the mean is exactly 1/2
            const double width = std::max(0.010 / laminate_freq, 2.0 / g.n);
            const int nfreq = laminate_freq;
            auto profile = make_field(g, Rank::scalar, [&](const double* x, int) {
                const double s = nfreq * x[0];
                return 0.5 * std::tanh(std::cos(two_pi * s) / (two_pi * width * nfreq));
            });
            // y1 with d1 y1 = amplitude * (chi - 1/2); other components zero
            auto sol = solve_poisson_zero_mean(partial(profile, 0));
            for (std::size_t p = 0; p < y.points(); ++p)
                y.at(p, 0) = -amplitude * sol.g.at(p, 0);
            break;
        }
        case InitKind::random_band: {
            Rng rng(seed);
            Rng r1 = rng.split(), r2 = rng.split();
            y = random_band_limited(g, Rank::vector, std::max(1, g.n / 8), r1);
            const double ny = l2_norm(gradient(y));
            if (ny > 1e-14) y *= amplitude / ny;
            u = random_band_limited(g, Rank::vector, std::max(1, g.n / 8), r2);
            const double nu = l2_norm(u);
            if (nu > 1e-14) u *= amplitude / nu;
            break;
        }
    }

    PeriodicField F = gradient(y);
    const Mat id = Mat::identity(g.d);
    for (std::size_t p = 0; p < F.points(); ++p)
        for (int k = 0; k < id.size(); ++k) F.at(p, k) += id.v[static_cast<std::size_t>(k)];
    return make_state(std::move(u), std::move(F));
}

Trajectory simulate(const SimConfig& cfg, const ElastoState& init) {
    require(cfg.output_stride >= 1, "simulate: output_stride >= 1 required");
    require(cfg.epsilon >= 0.0, "simulate: epsilon must be nonnegative");
    const Grid& g = cfg.grid;
    require(g.same_layout(init.F.grid()), "simulate: config and state grids differ");

    const long steps = std::lround(std::ceil(g.t_end / g.dt - 1e-9));
    Trajectory traj;
    const double curl0 = curl_defect(init.F);

    ElastoState state = init;
    state.t = 0.0;

    auto viscous_rate = [&](const PeriodicField& u) {
        const PeriodicField gu = gradient(u);
        const PeriodicField lu = laplacian(u);
        return std::pair<double, double>(inner(gu, gu), inner(lu, lu));
    };

    double work = 0.0;        // cumulative eps-work, Simpson per step
    double prev_rate = 0.0;   // eps * (|grad u|^2 + |lap u|^2) at the last step

    auto emit = [&](ElastoState& s, long step, double vg, double vl) {
        if (!all_finite(s.u) || !all_finite(s.F))
            throw SimError("non-finite state (time step instability)", step);
        auto parts = hodge_decompose(s.F);
        s.y = std::move(parts.potential);
        const auto inv = state_invariants(s);
        if (inv.curl > curl0 + 1e-9)
            throw SimError("curl defect grew beyond tolerance", step);
        const double limit = stability_dt_limit(s, *cfg.energy);
        if (g.dt > limit)
            throw SimError("time step " + std::to_string(g.dt) +
                               " violates the stability rule (limit " +
                               std::to_string(limit) + ")", step);
        traj.max_curl_defect = std::max(traj.max_curl_defect, inv.curl);
        traj.max_mean_u = std::max(traj.max_mean_u, inv.mean_u);
        traj.max_dtf_hm1 = std::max(traj.max_dtf_hm1, h_minus1_norm(gradient(s.u)));
        traj.times.push_back(s.t);
        traj.visc_grad.push_back(vg);
        traj.visc_lap.push_back(vl);
        traj.visc_work.push_back(work);
        traj.states.push_back(s);
    };

    {
        const auto [vg, vl] = viscous_rate(state.u);
        prev_rate = cfg.epsilon * (vg + vl);
        emit(state, 0, vg, vl);
    }
    PeriodicField mid_u;
    for (long step = 1; step <= steps; ++step) {
        state = advance_state(state, cfg, cfg.epsilon > 0.0 ? &mid_u : nullptr);
        state.t = static_cast<double>(step) * g.dt;
        const bool output = step % cfg.output_stride == 0 || step == steps;
        if (cfg.epsilon > 0.0) {
            const auto [vg, vl] = viscous_rate(state.u);
            const auto [mg, ml] = viscous_rate(mid_u);
            const double rate = cfg.epsilon * (vg + vl);
            const double rate_mid = cfg.epsilon * (mg + ml);
            work += g.dt / 6.0 * (prev_rate + 4.0 * rate_mid + rate);
            prev_rate = rate;
            if (output) emit(state, step, vg, vl);
        } else if (output) {
            const auto [vg, vl] = viscous_rate(state.u);
            emit(state, step, vg, vl);
        }
    }
    return traj;
}

}  // namespace eldyn
