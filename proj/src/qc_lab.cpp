#include "eldyn/qc_lab.hpp"

#include <cmath>
#include <limits>

#include "eldyn/rng.hpp"

namespace eldyn {
namespace {

constexpr double kDivergedCut = -1e7;

double default_tol(const Grid& g) { return 1e-7 * g.cell_volume(); }

/// |V(P)|^2 = |P|^2 + |P|^p.
double v2(const Mat& p, double pexp) {
    const double r = norm(p);
    return r * r + std::pow(r, pexp);
}

/// d|V(P)|^2/dP = 2P + p |P|^{p-2} P.
Mat v2_grad(const Mat& p, double pexp) {
    const double r = norm(p);
    const double coeff = 2.0 + (r == 0.0 ? 0.0 : pexp * std::pow(r, pexp - 2.0));
    return p * coeff;
}

void random_unit_vector(int d, Rng& rng, double* out) {
    double nrm = 0.0;
    do {
        nrm = 0.0;
        for (int i = 0; i < d; ++i) {
            out[i] = rng.normal();
            nrm += out[i] * out[i];
        }
        nrm = std::sqrt(nrm);
    } while (nrm < 1e-12);
    for (int i = 0; i < d; ++i) out[i] /= nrm;
}

}  // namespace

std::string to_string(QCStatus s) {
    switch (s) {
        case QCStatus::no_violation_found: return "no-violation-found";
        case QCStatus::violated: return "violated";
        case QCStatus::diverged: return "diverged";
    }
    return "?";
}

double qc_objective(const QCTestProblem& prob, const PeriodicField& phi) {
    const auto& w = *prob.energy;
    const double pexp = w.p();
    const double w_base = w.W(prob.xi);
    const PeriodicField grad = gradient(phi);
    std::vector<double> buf(grad.points());
    for (std::size_t pt = 0; pt < grad.points(); ++pt) {
        const Mat gp = grad.matrix_at(pt);
        buf[pt] = w.W(prob.xi + gp) - w_base - prob.c0 * v2(gp, pexp);
    }
    return pairwise_sum(buf) * prob.grid.cell_volume();
}

PeriodicField qc_objective_gradient(const QCTestProblem& prob, const PeriodicField& phi) {
    const auto& w = *prob.energy;
    const double pexp = w.p();
    const PeriodicField grad = gradient(phi);
    PeriodicField sigma(prob.grid, Rank::matrix);
    for (std::size_t pt = 0; pt < grad.points(); ++pt) {
        const Mat gp = grad.matrix_at(pt);
        sigma.set_matrix_at(pt, w.S(prob.xi + gp) - prob.c0 * v2_grad(gp, pexp));
    }
    PeriodicField g = divergence(sigma);
    g *= -1.0;
    return g;
}

QCVerdict qc_minimize(const QCTestProblem& prob) {
    require(prob.grid.n >= 16, "qc_minimize: grid resolution n >= 16 required");
    require(prob.restarts >= 1, "qc_minimize: restarts >= 1 required");
    const double tol = prob.tol > 0.0 ? prob.tol : default_tol(prob.grid);
    require(tol > 0.0, "qc_minimize: tol must be positive");

    QCVerdict verdict;
    verdict.n = prob.grid.n;
    verdict.tol = tol;
    verdict.witness = PeriodicField(prob.grid, Rank::vector);
    verdict.min_value = 0.0;  // phi = 0 always evaluates to exactly 0
    bool have_witness = false;

    Rng master(prob.seed);
    const int kmax = std::max(1, prob.grid.n / 4);

    for (int r = 0; r < prob.restarts; ++r) {
        Rng rng = master.split();
        const double amp =
            prob.restarts == 1
                ? 1.0
                : std::pow(10.0, -2.0 + 3.0 * r / static_cast<double>(prob.restarts - 1));
        PeriodicField phi = random_band_limited(prob.grid, Rank::vector, kmax, rng);
        {
            const PeriodicField g0 = gradient(phi);
            const double gn = l2_norm(g0);
            if (gn < 1e-14) continue;
            phi *= amp / gn;
        }

        double value = qc_objective(prob, phi);
        if (!std::isfinite(value)) {
            ++verdict.aborted_restarts;
            continue;
        }
        double step = 1.0;
        bool restart_diverged = false;
        bool restart_aborted = false;

        for (int iter = 0; iter < prob.max_iters; ++iter) {
            const PeriodicField g = qc_objective_gradient(prob, phi);
            const double gnorm2 = inner(g, g);
            if (std::sqrt(gnorm2) < 1e-10) break;

            double s = std::min(step * 2.0, 1e6);
            bool accepted = false;
            PeriodicField trial(prob.grid, Rank::vector);
            double trial_value = 0.0;
            while (s > 1e-14) {
                trial = phi - g * s;
                trial_value = qc_objective(prob, trial);
                if (std::isfinite(trial_value) &&
                    trial_value <= value - 1e-4 * s * gnorm2) {
                    accepted = true;
                    break;
                }
                s *= 0.5;
            }
            if (!accepted) {
                if (!std::isfinite(trial_value)) restart_aborted = true;
                break;
            }
            if (trial_value < kDivergedCut) {
                // keep a stable certificate if one can be pinned down
                restart_diverged = true;
                if (value > -tol) {
                    for (int bisect = 0; bisect < 60 && trial_value < kDivergedCut; ++bisect) {
                        s *= 0.5;
                        trial = phi - g * s;
                        trial_value = qc_objective(prob, trial);
                    }
                    if (std::isfinite(trial_value) && trial_value >= kDivergedCut &&
                        trial_value < value) {
                        phi = trial;
                        value = trial_value;
                    }
                }
                break;
            }
            phi = trial;
            value = trial_value;
            step = s;
        }

        if (restart_aborted) ++verdict.aborted_restarts;
        if (restart_diverged) ++verdict.diverged_restarts;
        if (std::isfinite(value) && value < verdict.min_value) {
            verdict.min_value = value;
            verdict.witness = phi;
            have_witness = true;
        }
    }

    if (have_witness && verdict.min_value < -tol)
        verdict.status = QCStatus::violated;
    else if (verdict.diverged_restarts > 0)
        verdict.status = QCStatus::diverged;
    else
        verdict.status = QCStatus::no_violation_found;
    return verdict;
}

RankOneReport rank_one_scan(const StoredEnergy& w, const Mat& xi, int directions,
                            double t_range, std::uint64_t seed, double tol) {
    require(directions >= 10, "rank_one_scan: directions >= 10 required");
    require(t_range > 0.0, "rank_one_scan: t_range must be positive");
    const int d = w.dim();
    const int nt = 41;
    const double h = 2.0 * t_range / (nt - 1);
    Rng rng(seed);
    RankOneReport rep;
    rep.min_second_difference = std::numeric_limits<double>::infinity();
    for (int dir = 0; dir < directions; ++dir) {
        double a[3], b[3];
        random_unit_vector(d, rng, a);
        random_unit_vector(d, rng, b);
        const Mat ab = outer(d, a, b);
        for (int j = 1; j + 1 < nt; ++j) {
            const double t = -t_range + j * h;
            const double sd = (w.W(xi + ab * (t + h)) - 2.0 * w.W(xi + ab * t) +
                               w.W(xi + ab * (t - h))) / (h * h);
            if (sd < rep.min_second_difference) {
                rep.min_second_difference = sd;
                rep.worst_t = t;
                for (int i = 0; i < d; ++i) {
                    rep.worst_a[i] = a[i];
                    rep.worst_b[i] = b[i];
                }
            }
        }
    }
    rep.refuted = rep.min_second_difference < -tol;
    return rep;
}

GardingReport garding_probe(const StoredEnergy& w, const PeriodicField& ybar,
                            const std::vector<PeriodicField>& samples) {
    require(!samples.empty(), "garding_probe: need at least one sample");
    const Grid& g = ybar.grid();
    const double pexp = w.p();
    const PeriodicField fbar = gradient(ybar);

    GardingReport rep;
    rep.samples.resize(samples.size());
    for (std::size_t s = 0; s < samples.size(); ++s) {
        const PeriodicField& z = samples[s];
        require(z.grid().same_layout(g), "garding_probe: sample grid mismatch");
        for (int c = 0; c < z.ncomp(); ++c)
            require(std::abs(mean(z, c)) < 1e-8, "garding_probe: samples must be zero-mean");
        const PeriodicField gz = gradient(z);
        std::vector<double> lhs_buf(g.points()), g_buf(g.points()), v_buf(g.points());
        const std::size_t npts = g.points();
        for (std::size_t pt = 0; pt < npts; ++pt) {
            const Mat inc = gz.matrix_at(pt) - fbar.matrix_at(pt);
            const Mat fb = fbar.matrix_at(pt);
            lhs_buf[pt] = v2(inc, pexp);
            g_buf[pt] = w.W(fb + inc) - w.W(fb) - dot(w.S(fb), inc);
            double dz2 = 0.0;
            for (int c = 0; c < z.ncomp(); ++c) {
                const double dv = z.at(pt, c) - ybar.at(pt, c);
                dz2 += dv * dv;
            }
            const double dz = std::sqrt(dz2);
            v_buf[pt] = dz * dz + std::pow(dz, pexp);
        }
        const double vol = g.cell_volume();
        rep.samples[s].lhs = pairwise_sum(lhs_buf) * vol;
        rep.samples[s].g_integral = pairwise_sum(g_buf) * vol;
        rep.samples[s].v_distance = pairwise_sum(v_buf) * vol;
    }

    for (const auto& smp : rep.samples)
        if (smp.g_integral <= 0.0 && smp.lhs > 1e-12 &&
            smp.v_distance < 1e-4 * smp.lhs)
            rep.degenerate_infeasible = true;

    auto all_slack_ok = [&](double c1, double c0) {
        for (const auto& smp : rep.samples) {
            const double slack = c1 * smp.g_integral + c0 * smp.v_distance - smp.lhs;
            if (slack < -1e-10 * std::max(1.0, smp.lhs)) return false;
        }
        return true;
    };

    std::vector<double> c0_grid{0.0};
    std::vector<double> c1_grid;
    for (int k = -4; k <= 20; ++k) {
        c0_grid.push_back(std::pow(2.0, k));
        c1_grid.push_back(std::pow(2.0, k));
    }
    for (double c0v : c0_grid) {
        for (double c1v : c1_grid) {
            if (all_slack_ok(c1v, c0v)) {
                rep.c1 = c1v;
                rep.c0 = c0v;
                rep.feasible = true;
                break;
            }
        }
        if (rep.feasible) break;
    }
    if (rep.feasible)
        for (auto& smp : rep.samples)
            smp.slack = rep.c1 * smp.g_integral + rep.c0 * smp.v_distance - smp.lhs;
    return rep;
}

std::vector<PeriodicField> make_garding_samples(const PeriodicField& ybar, int band_count,
                                                std::uint64_t seed) {
    const Grid& g = ybar.grid();
    Rng rng(seed);
    std::vector<PeriodicField> out;
    for (int j = 0; j < band_count; ++j) {
        Rng child = rng.split();
        PeriodicField pert = random_band_limited(g, Rank::vector, std::max(1, g.n / 8), child);
        const double nrm = l2_norm(gradient(pert));
        if (nrm > 1e-14) pert *= 0.3 / nrm;
        out.push_back(ybar + pert);
    }
    const double two_pi = 6.283185307179586476925286766559;
    for (int nmode : {g.n / 4, (47 * g.n) / 100}) {
        if (nmode < 1 || nmode >= g.n / 2) continue;
        const double amp = 1.0 / (two_pi * nmode);
        auto z = ybar;
        double x[3];
        for (std::size_t pt = 0; pt < z.points(); ++pt) {
            point_coords(g, pt, x);
            z.at(pt, 0) += amp * std::sin(two_pi * nmode * x[0]);
        }
        out.push_back(std::move(z));
    }
    return out;
}

}  // namespace eldyn
