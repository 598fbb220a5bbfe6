#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "eldyn/cli.hpp"
#include "eldyn/diagnostics.hpp"
#include "eldyn/field_io.hpp"
#include "eldyn/qc_lab.hpp"
#include "eldyn/rng.hpp"

namespace py = pybind11;
using namespace eldyn;

namespace {

Mat mat_from_numpy(py::array_t<double, py::array::c_style | py::array::forcecast> a) {
    if (a.ndim() != 2 || a.shape(0) != a.shape(1) || (a.shape(0) != 2 && a.shape(0) != 3))
        throw std::invalid_argument("expected a d x d array with d in {2,3}");
    Mat m(static_cast<int>(a.shape(0)));
    auto r = a.unchecked<2>();
    for (int i = 0; i < m.d; ++i)
        for (int j = 0; j < m.d; ++j) m(i, j) = r(i, j);
    return m;
}

py::array_t<double> mat_to_numpy(const Mat& m) {
    py::array_t<double> a({m.d, m.d});
    auto w = a.mutable_unchecked<2>();
    for (int i = 0; i < m.d; ++i)
        for (int j = 0; j < m.d; ++j) w(i, j) = m(i, j);
    return a;
}

py::array_t<double> field_to_numpy(const PeriodicField& f) {
    const Grid& g = f.grid();
    std::vector<py::ssize_t> shape;
    for (int a = 0; a < g.d; ++a) shape.push_back(g.n);
    shape.push_back(f.ncomp());
    py::array_t<double> out(shape);
    std::copy(f.data().begin(), f.data().end(), out.mutable_data());
    return out;
}

PeriodicField field_from_numpy(
    const Grid& g, Rank rank,
    py::array_t<double, py::array::c_style | py::array::forcecast> a) {
    PeriodicField f(g, rank);
    if (static_cast<std::size_t>(a.size()) != f.data().size())
        throw std::invalid_argument("array size does not match grid and rank");
    std::copy(a.data(), a.data() + a.size(), f.data().begin());
    return f;
}

Rank parse_rank(const std::string& s) {
    if (s == "scalar") return Rank::scalar;
    if (s == "vector") return Rank::vector;
    if (s == "matrix") return Rank::matrix;
    throw std::invalid_argument("rank must be scalar | vector | matrix");
}

}  // namespace

PYBIND11_MODULE(_eldyn, m) {
    m.doc() = "Periodic-domain workbench for quasiconvex elastodynamics";

    py::class_<Grid>(m, "Grid")
        .def(py::init<int, int, double, double>(), py::arg("d"), py::arg("n"),
             py::arg("t_end") = 1.0, py::arg("dt") = 1e-3)
        .def_readonly("d", &Grid::d)
        .def_readonly("n", &Grid::n)
        .def_readonly("t_end", &Grid::t_end)
        .def_readonly("dt", &Grid::dt)
        .def("cell_volume", &Grid::cell_volume);

    py::class_<PeriodicField>(m, "PeriodicField")
        .def(py::init([](const Grid& g, const std::string& rank) {
                 return PeriodicField(g, parse_rank(rank));
             }),
             py::arg("grid"), py::arg("rank"))
        .def_property_readonly("grid", &PeriodicField::grid)
        .def_property_readonly("rank",
                               [](const PeriodicField& f) {
                                   switch (f.rank()) {
                                       case Rank::scalar: return "scalar";
                                       case Rank::vector: return "vector";
                                       default: return "matrix";
                                   }
                               })
        .def("to_numpy", &field_to_numpy)
        .def_static("from_numpy", &field_from_numpy, py::arg("grid"),
                    py::arg("rank"), py::arg("values"))
        .def("l2_norm", [](const PeriodicField& f) { return l2_norm(f); })
        .def("mean", [](const PeriodicField& f, int comp) { return mean(f, comp); });

    m.def("from_numpy", [](const Grid& g, const std::string& rank,
                           py::array_t<double, py::array::c_style | py::array::forcecast> a) {
        return field_from_numpy(g, parse_rank(rank), a);
    });

    // spectral calculus
    m.def("gradient", &gradient);
    m.def("divergence", &divergence, py::arg("field"), py::arg("dealias") = false);
    m.def("laplacian", &laplacian);
    m.def("curl_defect", &curl_defect);
    m.def("solve_poisson_zero_mean", [](const PeriodicField& psi) {
        auto res = solve_poisson_zero_mean(psi);
        return py::make_tuple(res.g, res.removed_mean);
    });
    m.def("hodge_decompose", [](const PeriodicField& v) {
        auto parts = hodge_decompose(v);
        return py::make_tuple(parts.curl_free, parts.div_free, parts.potential);
    });
    m.def("random_band_limited",
          [](const Grid& g, const std::string& rank, int kmax, std::uint64_t seed) {
              Rng rng(seed);
              return random_band_limited(g, parse_rank(rank), kmax, rng);
          },
          py::arg("grid"), py::arg("rank"), py::arg("kmax"), py::arg("seed") = 0);
    m.def("save_field", &save_field);
    m.def("load_field", &load_field);

    // stored energies
    py::class_<StoredEnergy, std::shared_ptr<StoredEnergy>>(m, "StoredEnergy")
        .def_property_readonly("name", &StoredEnergy::name)
        .def_property_readonly("p", &StoredEnergy::p)
        .def_property_readonly("c0_candidate",
                               [](const StoredEnergy& w) -> py::object {
                                   if (w.c0_candidate()) return py::float_(*w.c0_candidate());
                                   return py::none();
                               })
        .def("W", [](const StoredEnergy& w, py::array_t<double> xi) {
            return w.W(mat_from_numpy(xi));
        })
        .def("S", [](const StoredEnergy& w, py::array_t<double> xi) {
            return mat_to_numpy(w.S(mat_from_numpy(xi)));
        })
        .def("DS", [](const StoredEnergy& w, py::array_t<double> xi, py::array_t<double> h) {
            return mat_to_numpy(w.DS(mat_from_numpy(xi), mat_from_numpy(h)));
        });
    m.def("make_energy",
          [](const std::string& name, int d) {
              return std::const_pointer_cast<StoredEnergy>(make_energy(name, d));
          },
          py::arg("name"), py::arg("d") = 2);
    m.def("energy_catalog", &energy_catalog);
    m.def("aux_v", [](double r, double p) { return aux_v(r, p); });
    m.def("aux_v_mat", [](py::array_t<double> xi, double p) {
        return aux_v(mat_from_numpy(xi), p);
    });
    m.def("energy_remainder",
          [](const StoredEnergy& w, py::array_t<double> fbar, py::array_t<double> xi) {
              return energy_remainder(w, mat_from_numpy(fbar), mat_from_numpy(xi));
          });
    m.def("stress_remainder",
          [](const StoredEnergy& w, py::array_t<double> fbar, py::array_t<double> xi) {
              return mat_to_numpy(stress_remainder(w, mat_from_numpy(fbar), mat_from_numpy(xi)));
          });
    m.def("verify_growth_bounds",
          [](const StoredEnergy& w, double radius, int samples, std::uint64_t seed,
             double fbar_radius) {
              const auto rep = verify_growth_bounds(w, radius, samples, seed, fbar_radius);
              py::dict d;
              d["w_over_p"] = rep.w_over_p;
              d["s_over_pm1"] = rep.s_over_pm1;
              d["ds_over_pm1"] = rep.ds_over_pm1;
              d["g_over_v2"] = rep.g_over_v2;
              d["gs_over_v2"] = rep.gs_over_v2;
              d["lipschitz_frame"] = rep.lipschitz_frame;
              d["coercivity_min"] = rep.coercivity_min;
              d["ratios_stable"] = rep.ratios_stable;
              d["nonfinite_evals"] = rep.nonfinite_evals;
              return d;
          },
          py::arg("energy"), py::arg("radius"), py::arg("samples"), py::arg("seed") = 0,
          py::arg("fbar_radius") = 2.0);

    // quasiconvexity lab
    py::class_<QCVerdict>(m, "QCVerdict")
        .def_readonly("min_value", &QCVerdict::min_value)
        .def_readonly("witness", &QCVerdict::witness)
        .def_readonly("n", &QCVerdict::n)
        .def_readonly("diverged_restarts", &QCVerdict::diverged_restarts)
        .def_readonly("aborted_restarts", &QCVerdict::aborted_restarts)
        .def_readonly("tol", &QCVerdict::tol)
        .def_property_readonly("status",
                               [](const QCVerdict& v) { return to_string(v.status); });
    m.def("qc_minimize",
          [](std::shared_ptr<StoredEnergy> w, py::array_t<double> xi, double c0, int n,
             int restarts, int max_iters, double tol, std::uint64_t seed) {
              QCTestProblem prob;
              prob.energy = w;
              prob.xi = mat_from_numpy(xi);
              prob.c0 = c0;
              prob.grid = Grid(prob.xi.d, n);
              prob.restarts = restarts;
              prob.max_iters = max_iters;
              prob.tol = tol;
              prob.seed = seed;
              return qc_minimize(prob);
          },
          py::arg("energy"), py::arg("xi"), py::arg("c0"), py::arg("n") = 32,
          py::arg("restarts") = 8, py::arg("max_iters") = 200, py::arg("tol") = -1.0,
          py::arg("seed") = 0);
    m.def("qc_objective",
          [](std::shared_ptr<StoredEnergy> w, py::array_t<double> xi, double c0,
             const PeriodicField& phi) {
              QCTestProblem prob;
              prob.energy = w;
              prob.xi = mat_from_numpy(xi);
              prob.c0 = c0;
              prob.grid = phi.grid();
              return qc_objective(prob, phi);
          });
    m.def("rank_one_scan",
          [](const StoredEnergy& w, py::array_t<double> xi, int directions, double t_range,
             std::uint64_t seed) {
              const auto rep = rank_one_scan(w, mat_from_numpy(xi), directions, t_range, seed);
              py::dict d;
              d["min_second_difference"] = rep.min_second_difference;
              d["worst_t"] = rep.worst_t;
              d["refuted"] = rep.refuted;
              return d;
          },
          py::arg("energy"), py::arg("xi"), py::arg("directions") = 16,
          py::arg("t_range") = 2.0, py::arg("seed") = 0);
    m.def("make_garding_samples", &make_garding_samples, py::arg("ybar"),
          py::arg("band_count") = 4, py::arg("seed") = 0);
    m.def("garding_probe",
          [](const StoredEnergy& w, const PeriodicField& ybar,
             const std::vector<PeriodicField>& samples) {
              const auto rep = garding_probe(w, ybar, samples);
              py::dict d;
              d["c1"] = rep.c1;
              d["c0"] = rep.c0;
              d["feasible"] = rep.feasible;
              d["degenerate_infeasible"] = rep.degenerate_infeasible;
              py::list rows;
              for (const auto& s : rep.samples) {
                  py::dict row;
                  row["lhs"] = s.lhs;
                  row["g_integral"] = s.g_integral;
                  row["v_distance"] = s.v_distance;
                  row["slack"] = s.slack;
                  rows.append(row);
              }
              d["samples"] = rows;
              return d;
          });

    // simulation
    py::class_<ElastoState>(m, "ElastoState")
        .def_readonly("t", &ElastoState::t)
        .def_readonly("u", &ElastoState::u)
        .def_readonly("F", &ElastoState::F)
        .def_readonly("y", &ElastoState::y)
        .def_property_readonly("F_mean",
                               [](const ElastoState& s) { return mat_to_numpy(s.F_mean); });
    m.def("make_state", &make_state, py::arg("u"), py::arg("F"), py::arg("t") = 0.0);
    m.def("build_initial_data",
          [](const std::string& kind, const Grid& g, double amplitude, int laminate_freq,
             std::uint64_t seed) {
              return build_initial_data(parse_init_kind(kind), g, amplitude, laminate_freq, seed);
          },
          py::arg("kind"), py::arg("grid"), py::arg("amplitude"), py::arg("laminate_freq") = 4,
          py::arg("seed") = 0);

    py::class_<Trajectory>(m, "Trajectory")
        .def_readonly("states", &Trajectory::states)
        .def_readonly("times", &Trajectory::times)
        .def_readonly("visc_grad", &Trajectory::visc_grad)
        .def_readonly("visc_lap", &Trajectory::visc_lap)
        .def_readonly("max_curl_defect", &Trajectory::max_curl_defect)
        .def_readonly("max_mean_u", &Trajectory::max_mean_u);
    m.def("simulate",
          [](std::shared_ptr<StoredEnergy> w, double epsilon, const Grid& g, bool dealias,
             int output_stride, const ElastoState& init) {
              SimConfig cfg;
              cfg.energy = w;
              cfg.epsilon = epsilon;
              cfg.grid = g;
              cfg.dealias = dealias;
              cfg.output_stride = output_stride;
              return simulate(cfg, init);
          },
          py::arg("energy"), py::arg("epsilon"), py::arg("grid"), py::arg("dealias"),
          py::arg("output_stride"), py::arg("init"));

    // diagnostics
    py::class_<EntropyReport>(m, "EntropyReport")
        .def_readonly("times", &EntropyReport::times)
        .def_readonly("total_entropy", &EntropyReport::total_entropy)
        .def_readonly("kinetic", &EntropyReport::kinetic)
        .def_readonly("potential", &EntropyReport::potential)
        .def_readonly("dissipation_defect", &EntropyReport::dissipation_defect)
        .def_readonly("curl_defect", &EntropyReport::curl_defect)
        .def_readonly("relent", &EntropyReport::relent)
        .def_readonly("v_distance", &EntropyReport::v_distance)
        .def_readonly("visc_grad", &EntropyReport::visc_grad)
        .def_readonly("visc_lap", &EntropyReport::visc_lap);
    m.def("build_entropy_report",
          [](const Trajectory& traj, const StoredEnergy& w, double epsilon,
             const Trajectory* ref) { return build_entropy_report(traj, w, epsilon, ref); },
          py::arg("trajectory"), py::arg("energy"), py::arg("epsilon") = 0.0,
          py::arg("reference") = nullptr);
    m.def("relative_entropy",
          [](const ElastoState& s, const ElastoState& ref, const StoredEnergy& w) {
              const auto rel = relative_entropy(s, ref, w);
              py::dict d;
              d["total"] = rel.total;
              d["kinetic_part"] = rel.kinetic_part;
              d["potential_part"] = rel.potential_part;
              d["field"] = rel.field;
              return d;
          });
    m.def("relative_entropy_remainder", &relative_entropy_remainder);
    py::class_<GronwallReport>(m, "GronwallReport")
        .def_readonly("times", &GronwallReport::times)
        .def_readonly("d_series", &GronwallReport::d_series)
        .def_readonly("residual", &GronwallReport::residual)
        .def_readonly("y_lhs", &GronwallReport::y_lhs)
        .def_readonly("y_rhs", &GronwallReport::y_rhs)
        .def_readonly("d0", &GronwallReport::d0)
        .def_readonly("lambda_env", &GronwallReport::lambda_env)
        .def_readonly("lambda_lsq", &GronwallReport::lambda_lsq)
        .def_readonly("y_chain_min_slack", &GronwallReport::y_chain_min_slack);
    m.def("gronwall_monitor", &gronwall_monitor);
    m.def("empirical_young_measure",
          [](const std::vector<PeriodicField>& fs, int cells, double p, bool with_histogram) {
              std::vector<const PeriodicField*> ptrs;
              for (const auto& f : fs) ptrs.push_back(&f);
              const auto ym = empirical_young_measure(ptrs, cells, p, with_histogram);
              py::list rows;
              for (const auto& c : ym.cell_stats) {
                  py::dict row;
                  row["mean"] = mat_to_numpy(c.mean);
                  row["second_moment"] = c.second_moment;
                  row["p_moment"] = c.p_moment;
                  row["variance"] = c.variance;
                  row["count"] = c.count;
                  row["dirac"] = is_dirac(c);
                  rows.append(row);
              }
              py::dict d;
              d["cells"] = ym.cells;
              d["p"] = ym.p;
              d["per_cell"] = rows;
              return d;
          },
          py::arg("fields"), py::arg("cells"), py::arg("p") = 2.0,
          py::arg("with_histogram") = false);

    // experiment CLI, runnable in process
    m.def("run_experiment", &run_experiment);
}
