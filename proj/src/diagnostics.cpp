#include "eldyn/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace eldyn {
namespace {

double v2_mat(const Mat& m, double p) {
    const double r = norm(m);
    return r * r + std::pow(r, p);
}

void format_value(std::ostream& os, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
}

double trapezoid_increment(double t0, double t1, double f0, double f1) {
    return 0.5 * (t1 - t0) * (f0 + f1);
}

}  // namespace

EntropyPair entropy_pair(const ElastoState& s, const StoredEnergy& w) {
    const Grid& g = s.u.grid();
    EntropyPair pair{PeriodicField(g, Rank::scalar), PeriodicField(g, Rank::vector)};
    for (std::size_t pt = 0; pt < g.points(); ++pt) {
        double kin = 0.0;
        for (int c = 0; c < g.d; ++c) kin += s.u.at(pt, c) * s.u.at(pt, c);
        const Mat f = s.F.matrix_at(pt);
        pair.eta.at(pt, 0) = 0.5 * kin + w.W(f);
        const Mat stress = w.S(f);
        for (int a = 0; a < g.d; ++a) {
            double qa = 0.0;
            for (int i = 0; i < g.d; ++i) qa += s.u.at(pt, i) * stress(i, a);
            pair.q.at(pt, a) = qa;
        }
    }
    return pair;
}

EntropyReport build_entropy_report(const Trajectory& traj, const StoredEnergy& w,
                                   double epsilon, const Trajectory* reference) {
    require(!traj.states.empty(), "build_entropy_report: empty trajectory");
    if (reference) {
        require(reference->states.size() == traj.states.size(),
                "build_entropy_report: reference output count mismatch");
    }
    EntropyReport rep;
    rep.epsilon = epsilon;
    rep.visc_grad = traj.visc_grad;
    rep.visc_lap = traj.visc_lap;

    // prefer the per-step accumulation from the integrator; trajectories
    // rebuilt from snapshots fall back to a stride-level trapezoid
    const bool have_work = traj.visc_work.size() == traj.states.size();
    double viscous_work = 0.0;
    double eta0 = 0.0;
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        const ElastoState& s = traj.states[i];
        const double kin = integrate(s.u, [&](const double* v) {
            double acc = 0.0;
            for (int c = 0; c < s.u.ncomp(); ++c) acc += v[c] * v[c];
            return 0.5 * acc;
        });
        const double pot = integrate(s.F, [&](const double* v) {
            Mat m(s.F.grid().d);
            for (int k = 0; k < m.size(); ++k) m.v[static_cast<std::size_t>(k)] = v[k];
            return w.W(m);
        });
        const double total = kin + pot;
        if (i == 0) eta0 = total;
        if (have_work)
            viscous_work = traj.visc_work[i];
        else if (i > 0)
            viscous_work += trapezoid_increment(
                traj.times[i - 1], traj.times[i],
                epsilon * (traj.visc_grad[i - 1] + traj.visc_lap[i - 1]),
                epsilon * (traj.visc_grad[i] + traj.visc_lap[i]));

        rep.times.push_back(traj.times[i]);
        rep.kinetic.push_back(kin);
        rep.potential.push_back(pot);
        rep.total_entropy.push_back(total);
        rep.dissipation_defect.push_back(eta0 - total - viscous_work);
        rep.curl_defect.push_back(curl_defect(s.F));

        if (reference) {
            const ElastoState& r = reference->states[i];
            rep.relent.push_back(relative_entropy(s, r, w).total);
            std::vector<double> buf(s.y.points());
            for (std::size_t pt = 0; pt < s.y.points(); ++pt) {
                double dy2 = 0.0;
                for (int c = 0; c < s.y.ncomp(); ++c) {
                    const double dv = s.y.at(pt, c) - r.y.at(pt, c);
                    dy2 += dv * dv;
                }
                const double dy = std::sqrt(dy2);
                buf[pt] = dy * dy + std::pow(dy, w.p());
            }
            rep.v_distance.push_back(pairwise_sum(buf) * s.y.grid().cell_volume());
        }
    }
    return rep;
}

void write_entropy_csv(std::ostream& os, const EntropyReport& rep) {
    os << "t,total_entropy,kinetic,potential,dissipation_defect,curl_defect,relent,v_distance\n";
    for (std::size_t i = 0; i < rep.times.size(); ++i) {
        format_value(os, rep.times[i]);
        os << ',';
        format_value(os, rep.total_entropy[i]);
        os << ',';
        format_value(os, rep.kinetic[i]);
        os << ',';
        format_value(os, rep.potential[i]);
        os << ',';
        format_value(os, rep.dissipation_defect[i]);
        os << ',';
        format_value(os, rep.curl_defect[i]);
        os << ',';
        if (i < rep.relent.size()) format_value(os, rep.relent[i]);
        os << ',';
        if (i < rep.v_distance.size()) format_value(os, rep.v_distance[i]);
        os << '\n';
    }
}

RelativeEntropy relative_entropy(const ElastoState& s, const ElastoState& ref,
                                 const StoredEnergy& w) {
    const Grid& g = s.u.grid();
    require(g.same_layout(ref.u.grid()), "relative_entropy: grid mismatch");
    RelativeEntropy out{PeriodicField(g, Rank::scalar), 0.0, 0.0, 0.0};
    std::vector<double> kin_buf(g.points()), pot_buf(g.points());
    for (std::size_t pt = 0; pt < g.points(); ++pt) {
        double kin = 0.0;
        for (int c = 0; c < g.d; ++c) {
            const double dv = s.u.at(pt, c) - ref.u.at(pt, c);
            kin += dv * dv;
        }
        kin *= 0.5;
        const Mat f = s.F.matrix_at(pt);
        const Mat fr = ref.F.matrix_at(pt);
        const double pot = w.W(f) - w.W(fr) - dot(w.S(fr), f - fr);
        kin_buf[pt] = kin;
        pot_buf[pt] = pot;
        out.field.at(pt, 0) = kin + pot;
    }
    out.kinetic_part = pairwise_sum(kin_buf) * g.cell_volume();
    out.potential_part = pairwise_sum(pot_buf) * g.cell_volume();
    out.total = out.kinetic_part + out.potential_part;
    return out;
}

double relative_entropy_remainder(const ElastoState& s, const ElastoState& ref,
                                  const StoredEnergy& w) {
    const Grid& g = s.u.grid();
    require(g.same_layout(ref.u.grid()), "relative_entropy_remainder: grid mismatch");
    const PeriodicField grad_ur = gradient(ref.u);
    std::vector<double> buf(g.points());
    for (std::size_t pt = 0; pt < g.points(); ++pt) {
        const Mat inc = s.F.matrix_at(pt) - ref.F.matrix_at(pt);
        const Mat gs = stress_remainder(w, ref.F.matrix_at(pt), inc);
        buf[pt] = dot(grad_ur.matrix_at(pt), gs);
    }
    return pairwise_sum(buf) * g.cell_volume();
}

GronwallReport gronwall_monitor(const Trajectory& traj, const Trajectory& ref,
                                const StoredEnergy& w) {
    require(traj.states.size() == ref.states.size() && !traj.states.empty(),
            "gronwall_monitor: trajectories must share output times");
    const Grid& g = traj.states.front().u.grid();
    require(g.same_layout(ref.states.front().u.grid()), "gronwall_monitor: grid mismatch");
    const double p = w.p();
    constexpr double kFloor = 1e-12;

    GronwallReport rep;
    double prev_t = 0.0;
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        const double t = traj.times[i];
        require(i == 0 || t > prev_t, "gronwall_monitor: non-monotone time stamps");
        require(std::abs(t - ref.times[i]) < 1e-12, "gronwall_monitor: output times differ");
        prev_t = t;
        const ElastoState& a = traj.states[i];
        const ElastoState& b = ref.states[i];

        std::vector<double> d_buf(g.points()), ylhs_buf(g.points()), yint_buf(g.points());
        for (std::size_t pt = 0; pt < g.points(); ++pt) {
            const Mat df = a.F.matrix_at(pt) - b.F.matrix_at(pt);
            double du2 = 0.0;
            for (int c = 0; c < g.d; ++c) {
                const double dv = a.u.at(pt, c) - b.u.at(pt, c);
                du2 += dv * dv;
            }
            double dy2 = 0.0;
            for (int c = 0; c < g.d; ++c) {
                const double dv = a.y.at(pt, c) - b.y.at(pt, c);
                dy2 += dv * dv;
            }
            const double dy = std::sqrt(dy2);
            d_buf[pt] = v2_mat(df, p) + du2 + (dy2 + std::pow(dy, p));
            ylhs_buf[pt] = 0.5 * dy2 + std::pow(dy, p) / p;
            yint_buf[pt] = du2 + 0.5 * dy2 + 0.5 * std::pow(dy, 2.0 * p - 2.0);
        }
        const double vol = g.cell_volume();
        rep.times.push_back(t);
        rep.d_series.push_back(pairwise_sum(d_buf) * vol);
        rep.y_lhs.push_back(pairwise_sum(ylhs_buf) * vol);
        // cumulative bound integrand; finished below once times are known
        rep.y_rhs.push_back(pairwise_sum(yint_buf) * vol);
    }

    // turn y_rhs from instantaneous integrand values into the chain bound
    std::vector<double> integrand = rep.y_rhs;
    rep.y_rhs[0] = rep.y_lhs[0];
    double acc = 0.0;
    for (std::size_t i = 1; i < integrand.size(); ++i) {
        acc += trapezoid_increment(rep.times[i - 1], rep.times[i], integrand[i - 1], integrand[i]);
        rep.y_rhs[i] = rep.y_lhs[0] + acc;
    }
    rep.y_chain_min_slack = 0.0;
    for (std::size_t i = 0; i < rep.times.size(); ++i)
        rep.y_chain_min_slack = std::min(rep.y_chain_min_slack, rep.y_rhs[i] - rep.y_lhs[i]);

    rep.d0 = rep.d_series.front();
    const double base = rep.d0 + kFloor;
    const double t0 = rep.times.front();
    double lambda = 0.0;
    for (std::size_t i = 1; i < rep.d_series.size(); ++i) {
        const double tau = rep.times[i] - t0;
        if (rep.d_series[i] > base && tau > 0.0)
            lambda = std::max(lambda, std::log(rep.d_series[i] / base) / tau);
    }
    rep.lambda_env = lambda;

    double sxx = 0.0, sxy = 0.0, sx = 0.0, sy = 0.0;
    std::size_t m = 0;
    for (std::size_t i = 0; i < rep.d_series.size(); ++i) {
        if (rep.d_series[i] <= 100.0 * kFloor) continue;
        const double x = rep.times[i] - t0, y = std::log(rep.d_series[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    const double denom = static_cast<double>(m) * sxx - sx * sx;
    rep.lambda_lsq = (m >= 2 && std::abs(denom) > 1e-300)
                         ? (static_cast<double>(m) * sxy - sx * sy) / denom
                         : 0.0;

    for (std::size_t i = 0; i < rep.d_series.size(); ++i)
        rep.residual.push_back(rep.d_series[i] -
                               base * std::exp(rep.lambda_env * (rep.times[i] - t0)));
    return rep;
}

EmpiricalYoungMeasure empirical_young_measure(const std::vector<const PeriodicField*>& fs,
                                              int cells, double p, bool with_histogram,
                                              int bins) {
    require(!fs.empty(), "empirical_young_measure: no fields");
    const Grid& g = fs.front()->grid();
    require(cells >= 1 && g.n % cells == 0, "empirical_young_measure: cells must divide n");
    for (const auto* f : fs) {
        require(f->grid().same_layout(g), "empirical_young_measure: grid mismatch");
        require(f->rank() == Rank::matrix, "empirical_young_measure: matrix fields required");
    }
    const int per_axis = g.n / cells;
    const int ncells = g.d == 2 ? cells * cells : cells * cells * cells;
    const int ncomp = g.d * g.d;

    EmpiricalYoungMeasure m;
    m.d = g.d;
    m.n = g.n;
    m.cells = cells;
    m.p = p;
    m.cell_stats.assign(static_cast<std::size_t>(ncells), YoungCell{Mat(g.d), 0, 0, 0, 0});

    auto cell_of = [&](std::size_t pt) {
        int idx[3] = {0, 0, 0};
        std::size_t rem = pt;
        for (int a = g.d - 1; a >= 0; --a) {
            idx[a] = static_cast<int>(rem % static_cast<std::size_t>(g.n));
            rem /= static_cast<std::size_t>(g.n);
        }
        int cell = 0;
        for (int a = 0; a < g.d; ++a) cell = cell * cells + idx[a] / per_axis;
        return static_cast<std::size_t>(cell);
    };

    // first pass: means and raw moments
    for (const auto* f : fs)
        for (std::size_t pt = 0; pt < f->points(); ++pt) {
            YoungCell& c = m.cell_stats[cell_of(pt)];
            const Mat v = f->matrix_at(pt);
            c.mean += v;
            const double r = norm(v);
            c.second_moment += r * r;
            c.p_moment += std::pow(r, p);
            ++c.count;
        }
    for (auto& c : m.cell_stats) {
        const double inv = 1.0 / static_cast<double>(c.count);
        c.mean *= inv;
        c.second_moment *= inv;
        c.p_moment *= inv;
    }
    // second pass: centered variance (two-pass keeps constants exactly at 0)
    for (const auto* f : fs)
        for (std::size_t pt = 0; pt < f->points(); ++pt) {
            YoungCell& c = m.cell_stats[cell_of(pt)];
            const Mat dv = f->matrix_at(pt) - c.mean;
            c.variance += dot(dv, dv);
        }
    for (auto& c : m.cell_stats) c.variance /= static_cast<double>(c.count);

    if (with_histogram) {
        m.bins = bins;
        double range = 0.0;
        for (const auto* f : fs)
            for (double v : f->data()) range = std::max(range, std::abs(v));
        m.bin_range = range > 0.0 ? range * (1.0 + 1e-12) : 1.0;
        m.histogram.assign(static_cast<std::size_t>(ncells),
                           std::vector<std::vector<std::size_t>>(
                               static_cast<std::size_t>(ncomp),
                               std::vector<std::size_t>(static_cast<std::size_t>(bins), 0)));
        for (const auto* f : fs)
            for (std::size_t pt = 0; pt < f->points(); ++pt) {
                const std::size_t cell = cell_of(pt);
                for (int c = 0; c < ncomp; ++c) {
                    const double v = f->at(pt, c);
                    int b = static_cast<int>((v + m.bin_range) / (2.0 * m.bin_range) * bins);
                    b = std::clamp(b, 0, bins - 1);
                    ++m.histogram[cell][static_cast<std::size_t>(c)][static_cast<std::size_t>(b)];
                }
            }
    }
    return m;
}

std::vector<double> young_cell_average(const std::vector<const PeriodicField*>& fs, int cells,
                                       const std::function<double(const Mat&)>& g) {
    require(!fs.empty(), "young_cell_average: no fields");
    const Grid& grid = fs.front()->grid();
    require(cells >= 1 && grid.n % cells == 0, "young_cell_average: cells must divide n");
    const int per_axis = grid.n / cells;
    const int ncells = grid.d == 2 ? cells * cells : cells * cells * cells;
    std::vector<double> sums(static_cast<std::size_t>(ncells), 0.0);
    std::vector<std::size_t> counts(static_cast<std::size_t>(ncells), 0);
    for (const auto* f : fs)
        for (std::size_t pt = 0; pt < f->points(); ++pt) {
            int idx[3] = {0, 0, 0};
            std::size_t rem = pt;
            for (int a = grid.d - 1; a >= 0; --a) {
                idx[a] = static_cast<int>(rem % static_cast<std::size_t>(grid.n));
                rem /= static_cast<std::size_t>(grid.n);
            }
            int cell = 0;
            for (int a = 0; a < grid.d; ++a) cell = cell * cells + idx[a] / per_axis;
            sums[static_cast<std::size_t>(cell)] += g(f->matrix_at(pt));
            ++counts[static_cast<std::size_t>(cell)];
        }
    for (std::size_t c = 0; c < sums.size(); ++c) sums[c] /= static_cast<double>(counts[c]);
    return sums;
}

std::string young_measure_json(const EmpiricalYoungMeasure& m) {
    std::ostringstream os;
    os.precision(17);
    os << "{\"cells\": " << m.cells << ", \"d\": " << m.d << ", \"n\": " << m.n
       << ", \"p\": " << m.p << ", \"per_cell\": [";
    for (std::size_t c = 0; c < m.cell_stats.size(); ++c) {
        const YoungCell& cs = m.cell_stats[c];
        if (c) os << ", ";
        os << "{\"cell\": " << c << ", \"count\": " << cs.count << ", \"mean\": [";
        for (int k = 0; k < cs.mean.size(); ++k) {
            if (k) os << ", ";
            os << cs.mean.v[static_cast<std::size_t>(k)];
        }
        os << "], \"p_moment\": " << cs.p_moment
           << ", \"second_moment\": " << cs.second_moment
           << ", \"variance\": " << cs.variance << "}";
    }
    os << "]}";
    return os.str();
}

void young_histogram_csv(std::ostream& os, const EmpiricalYoungMeasure& m) {
    os << "cell,entry,bin,lo,hi,count\n";
    const double width = 2.0 * m.bin_range / std::max(1, m.bins);
    for (std::size_t c = 0; c < m.histogram.size(); ++c)
        for (std::size_t e = 0; e < m.histogram[c].size(); ++e)
            for (std::size_t b = 0; b < m.histogram[c][e].size(); ++b) {
                os << c << ',' << e << ',' << b << ',';
                format_value(os, -m.bin_range + width * static_cast<double>(b));
                os << ',';
                format_value(os, -m.bin_range + width * static_cast<double>(b + 1));
                os << ',' << m.histogram[c][e][b] << '\n';
            }
}

}  // namespace eldyn
