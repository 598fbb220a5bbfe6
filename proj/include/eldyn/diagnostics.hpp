#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "eldyn/sim.hpp"

namespace eldyn {

/// eta = 1/2 |u|^2 + W(F) and the flux q_a = u_i S(F)_{ia}.
struct EntropyPair {
    PeriodicField eta;  ///< scalar
    PeriodicField q;    ///< vector
};
EntropyPair entropy_pair(const ElastoState& s, const StoredEnergy& w);

/// Time series of the entropy budget. The viscous work series back the
/// eps-energy law but are not part of the CSV schema.
struct EntropyReport {
    std::vector<double> times;
    std::vector<double> total_entropy;
    std::vector<double> kinetic;
    std::vector<double> potential;
    std::vector<double> dissipation_defect;  ///< cumulative, >= 0 up to tolerance
    std::vector<double> curl_defect;
    std::vector<double> relent;      ///< empty without a reference
    std::vector<double> v_distance;  ///< empty without a reference
    std::vector<double> visc_grad;
    std::vector<double> visc_lap;
    double epsilon = 0.0;
};

/// Emits "t,total_entropy,kinetic,potential,dissipation_defect,curl_defect,
/// relent,v_distance"; absent columns stay empty.
void write_entropy_csv(std::ostream& os, const EntropyReport& rep);

EntropyReport build_entropy_report(const Trajectory& traj, const StoredEnergy& w,
                                   double epsilon, const Trajectory* reference = nullptr);

/// eta_rel = 1/2 |u - u_ref|^2 + W(F) - W(F_ref) - S(F_ref) : (F - F_ref).
struct RelativeEntropy {
    PeriodicField field;          ///< scalar, pointwise eta_rel
    double total = 0.0;
    double kinetic_part = 0.0;    ///< int 1/2 |u - u_ref|^2
    double potential_part = 0.0;  ///< int of the Taylor remainder in F
};
RelativeEntropy relative_entropy(const ElastoState& s, const ElastoState& ref,
                                 const StoredEnergy& w);

/// R = int grad(u_ref) : [S(F) - S(F_ref) - DS(F_ref)(F - F_ref)] dx,
/// the remainder the relative entropy identity picks up; zero for linear S.
double relative_entropy_remainder(const ElastoState& s, const ElastoState& ref,
                                  const StoredEnergy& w);

/// Weak-strong stability monitor: D(t) = int (|V(F-Fr)|^2 + |u-ur|^2 +
/// |V(y-yr)|^2) per output, the smallest envelope rate Lambda with
/// D(t) <= (D(0)+floor) e^{Lambda t}, a least-squares rate, and the
/// Young's-inequality chain for the potential distance.
struct GronwallReport {
    std::vector<double> times;
    std::vector<double> d_series;
    std::vector<double> residual;      ///< D_i - (D0+floor) e^{Lambda t_i}
    std::vector<double> y_lhs;         ///< int 1/2|y-yr|^2 + |y-yr|^p / p
    std::vector<double> y_rhs;         ///< y_lhs(0) + cumulative bound integrand
    double d0 = 0.0;
    double lambda_env = 0.0;
    double lambda_lsq = 0.0;
    double y_chain_min_slack = 0.0;    ///< min (y_rhs - y_lhs)
};
GronwallReport gronwall_monitor(const Trajectory& traj, const Trajectory& ref,
                                const StoredEnergy& w);

/// Per macro-cell sample statistics of matrix fields, the empirical stand-in
/// for the parametrized measures the oscillation limit generates.
struct YoungCell {
    Mat mean;                  ///< barycenter, equals the cell average exactly
    double second_moment = 0;  ///< mean |F|^2
    double p_moment = 0;       ///< mean |F|^p
    double variance = 0;       ///< mean |F - mean|^2 (two-pass)
    std::size_t count = 0;
};

struct EmpiricalYoungMeasure {
    int d = 2;
    int n = 0;
    int cells = 0;   ///< macro-cells per axis
    double p = 2.0;
    std::vector<YoungCell> cell_stats;  ///< cells^d entries, row-major
    // optional fixed-binning histograms: counts[cell][entry][bin]
    int bins = 0;
    double bin_range = 0.0;  ///< entries binned over [-bin_range, bin_range]
    std::vector<std::vector<std::vector<std::size_t>>> histogram;
};

EmpiricalYoungMeasure empirical_young_measure(const std::vector<const PeriodicField*>& fs,
                                              int cells, double p,
                                              bool with_histogram = false, int bins = 32);

/// Action <nu, g> per cell as plain sample averages of g(F).
std::vector<double> young_cell_average(const std::vector<const PeriodicField*>& fs, int cells,
                                       const std::function<double(const Mat&)>& g);

inline bool is_dirac(const YoungCell& c, double tol = 1e-10) { return c.variance < tol; }

std::string young_measure_json(const EmpiricalYoungMeasure& m);
void young_histogram_csv(std::ostream& os, const EmpiricalYoungMeasure& m);

}  // namespace eldyn
