#include "eldyn/cli.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <set>
#include <sstream>

#include "eldyn/diagnostics.hpp"
#include "eldyn/field_io.hpp"
#include "eldyn/qc_lab.hpp"
#include "eldyn/sim.hpp"

#ifndef ELDYN_BUILD_ID
#define ELDYN_BUILD_ID "untracked"
#endif

namespace eldyn {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const std::set<std::string> kSchema = {
    "energy", "p", "c0", "epsilon", "d", "n", "dt", "t_end",
    "init.kind", "init.amplitude", "init.N", "seed",
    "output.dir", "output.stride", "dealias", "reference.dir"};

using KVMap = std::map<std::string, std::string>;

void set_key(KVMap& kv, const std::string& key, const std::string& value) {
    if (!kSchema.count(key)) throw ConfigError("unknown key `" + key + "`");
    kv[key] = value;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

void load_config_file(KVMap& kv, const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file `" + path + "`");
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              " is not `key = value`: " + line);
        set_key(kv, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

struct ParsedArgs {
    std::string subcommand;
    std::vector<std::string> positionals;
    KVMap kv;
};

ParsedArgs parse_args(const std::vector<std::string>& args) {
    ParsedArgs out;
    if (args.empty()) throw ConfigError("missing subcommand (simulate | qc-test | garding | young-measure | compare)");
    out.subcommand = args[0];
    for (std::size_t i = 1; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (a.rfind("--", 0) != 0) {
            out.positionals.push_back(a);
            continue;
        }
        std::string key = a.substr(2), value;
        const auto eq = key.find('=');
        if (eq != std::string::npos) {
            value = key.substr(eq + 1);
            key = key.substr(0, eq);
        } else {
            if (i + 1 >= args.size()) throw ConfigError("flag --" + key + " needs a value");
            value = args[++i];
        }
        if (key == "config")
            load_config_file(out.kv, value);
        else
            set_key(out.kv, key, value);
    }
    return out;
}

double get_double(const KVMap& kv, const std::string& key, double fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    try {
        std::size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw ConfigError("key `" + key + "` has a non-numeric value: " + it->second);
    }
}

long get_long(const KVMap& kv, const std::string& key, long fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    try {
        std::size_t pos = 0;
        const long v = std::stol(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw ConfigError("key `" + key + "` has a non-integer value: " + it->second);
    }
}

std::uint64_t get_seed(const KVMap& kv) {
    auto it = kv.find("seed");
    if (it == kv.end()) return 0;
    try {
        return std::stoull(it->second);
    } catch (...) {
        throw ConfigError("key `seed` has a non-integer value: " + it->second);
    }
}

bool get_bool(const KVMap& kv, const std::string& key, bool fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw ConfigError("key `" + key + "` must be true or false, got: " + it->second);
}

std::string get_string(const KVMap& kv, const std::string& key, const std::string& fallback) {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
}

/// Everything a run needs, resolved with defaults; the written config is the
/// provenance record for the run.
struct Resolved {
    std::string subcommand;
    std::string energy = "quadratic";
    double c0 = 0.0;
    double epsilon = 0.0;
    int d = 2;
    int n = 32;
    double dt = 1e-3;
    double t_end = 1.0;
    std::string init_kind = "smooth-wave";
    double init_amplitude = 0.1;
    int init_freq = 4;
    std::uint64_t seed = 0;
    std::string output_dir = "eldyn-out";
    int output_stride = 10;
    bool dealias = false;
    std::string reference_dir;  // empty when absent

    KVMap as_kv() const {
        KVMap kv;
        kv["energy"] = energy;
        kv["c0"] = format(c0);
        kv["epsilon"] = format(epsilon);
        kv["d"] = std::to_string(d);
        kv["n"] = std::to_string(n);
        kv["dt"] = format(dt);
        kv["t_end"] = format(t_end);
        kv["init.kind"] = init_kind;
        kv["init.amplitude"] = format(init_amplitude);
        kv["init.N"] = std::to_string(init_freq);
        kv["seed"] = std::to_string(seed);
        kv["output.dir"] = output_dir;
        kv["output.stride"] = std::to_string(output_stride);
        kv["dealias"] = dealias ? "true" : "false";
        if (!reference_dir.empty()) kv["reference.dir"] = reference_dir;
        return kv;
    }

    static std::string format(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }
};

Resolved resolve(const ParsedArgs& args) {
    Resolved r;
    r.subcommand = args.subcommand;
    r.energy = get_string(args.kv, "energy", r.energy);
    r.c0 = get_double(args.kv, "c0", r.c0);
    r.epsilon = get_double(args.kv, "epsilon", r.epsilon);
    r.d = static_cast<int>(get_long(args.kv, "d", r.d));
    r.n = static_cast<int>(get_long(args.kv, "n", r.n));
    r.dt = get_double(args.kv, "dt", r.dt);
    r.t_end = get_double(args.kv, "t_end", r.t_end);
    r.init_kind = get_string(args.kv, "init.kind", r.init_kind);
    r.init_amplitude = get_double(args.kv, "init.amplitude", r.init_amplitude);
    r.init_freq = static_cast<int>(get_long(args.kv, "init.N", r.init_freq));
    r.seed = get_seed(args.kv);
    r.output_dir = get_string(args.kv, "output.dir", r.output_dir);
    r.output_stride = static_cast<int>(get_long(args.kv, "output.stride", r.output_stride));
    r.reference_dir = get_string(args.kv, "reference.dir", "");

    if (r.d != 2 && r.d != 3) throw ConfigError("key `d` must be 2 or 3");
    if (r.n < 4 || r.n % 2 != 0) throw ConfigError("key `n` must be even and >= 4");
    if (r.dt <= 0.0) throw ConfigError("key `dt` must be positive");
    if (r.t_end <= 0.0) throw ConfigError("key `t_end` must be positive");
    if (r.epsilon < 0.0) throw ConfigError("key `epsilon` must be nonnegative");
    if (r.output_stride < 1) throw ConfigError("key `output.stride` must be >= 1");
    if (r.init_freq < 1) throw ConfigError("key `init.N` must be >= 1");

    std::shared_ptr<const StoredEnergy> w;
    try {
        w = make_energy(r.energy, r.d);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("key `energy`: ") + e.what());
    }
    if (args.kv.count("p")) {
        const double p = get_double(args.kv, "p", w->p());
        if (p != w->p())
            throw ConfigError("key `p` (" + Resolved::format(p) + ") contradicts energy `" +
                              r.energy + "` with p = " + Resolved::format(w->p()));
    }
    r.dealias = get_bool(args.kv, "dealias", w->p() > 2.0);
    try {
        parse_init_kind(r.init_kind);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("key `init.kind`: ") + e.what());
    }
    return r;
}

void write_resolved_config(const Resolved& r) {
    std::ofstream os(fs::path(r.output_dir) / "config.cfg");
    for (const auto& [k, v] : r.as_kv()) os << k << " = " << v << "\n";
}

void write_atomic(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        os << content;
    }
    fs::rename(tmp, path);
}

json config_json(const Resolved& r) {
    json j;
    for (const auto& [k, v] : r.as_kv()) j[k] = v;
    return j;
}

struct ManifestData {
    json invariants;
    std::vector<double> stride_times;
    int exit_status = 0;
};

void write_manifest(const Resolved& r, const ManifestData& m, double wall_seconds) {
    json j;
    j["build_id"] = ELDYN_BUILD_ID;
    j["config"] = config_json(r);
    j["exit_status"] = m.exit_status;
    j["invariants"] = m.invariants;
    j["stride_times"] = m.stride_times;
    j["wall_time_seconds"] = wall_seconds;
    write_atomic(fs::path(r.output_dir) / "manifest.json", j.dump(2) + "\n");
}

void save_state_file(const fs::path& path, const ElastoState& s) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
    write_field_record(os, s.u);
    write_field_record(os, s.F);
    write_field_record(os, s.y);
}

ElastoState load_state_file(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path.string());
    PeriodicField u = read_field_record(is);
    PeriodicField F = read_field_record(is);
    PeriodicField y = read_field_record(is);
    is.peek();
    if (!is.eof()) throw std::runtime_error("trailing bytes in " + path.string());
    ElastoState s;
    s.u = std::move(u);
    s.F = std::move(F);
    s.y = std::move(y);
    s.F_mean = Mat(s.F.grid().d);
    for (int k = 0; k < s.F_mean.size(); ++k)
        s.F_mean.v[static_cast<std::size_t>(k)] = mean(s.F, k);
    return s;
}

json load_run_manifest(const std::string& dir) {
    std::ifstream is(fs::path(dir) / "manifest.json");
    if (!is) throw ConfigError("run directory `" + dir + "` has no manifest.json");
    json j;
    try {
        is >> j;
    } catch (const std::exception& e) {
        throw ConfigError("manifest in `" + dir + "` does not parse: " + e.what());
    }
    return j;
}

Trajectory load_run(const std::string& dir, std::string* energy_name) {
    const json man = load_run_manifest(dir);
    Trajectory traj;
    traj.times = man.at("stride_times").get<std::vector<double>>();
    if (energy_name) *energy_name = man.at("config").at("energy").get<std::string>();
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        ElastoState s = load_state_file(fs::path(dir) / ("t" + std::to_string(i) + ".field"));
        s.t = traj.times[i];
        traj.states.push_back(std::move(s));
    }
    return traj;
}

ElastoState build_init(const Resolved& r, const Grid& g) {
    return build_initial_data(parse_init_kind(r.init_kind), g, r.init_amplitude, r.init_freq,
                              r.seed);
}

int cmd_simulate(const Resolved& r) {
    const Grid grid(r.d, r.n, r.t_end, r.dt);
    SimConfig cfg;
    cfg.energy = make_energy(r.energy, r.d);
    cfg.epsilon = r.epsilon;
    cfg.grid = grid;
    cfg.dealias = r.dealias;
    cfg.output_stride = r.output_stride;

    std::unique_ptr<Trajectory> reference;
    if (!r.reference_dir.empty()) {
        std::string ref_energy;
        reference = std::make_unique<Trajectory>(load_run(r.reference_dir, &ref_energy));
    }

    ManifestData man;
    const auto started = std::chrono::steady_clock::now();
    try {
        auto traj = simulate(cfg, build_init(r, grid));
        auto rep = build_entropy_report(traj, *cfg.energy, r.epsilon, reference.get());
        for (std::size_t i = 0; i < traj.states.size(); ++i)
            save_state_file(fs::path(r.output_dir) / ("t" + std::to_string(i) + ".field"),
                            traj.states[i]);
        {
            std::ofstream os(fs::path(r.output_dir) / "entropy.csv");
            write_entropy_csv(os, rep);
        }
        double min_defect = 0.0;
        for (double v : rep.dissipation_defect) min_defect = std::min(min_defect, v);
        man.invariants["max_curl_defect"] = traj.max_curl_defect;
        man.invariants["max_mean_u"] = traj.max_mean_u;
        man.invariants["max_dtF_Hminus1"] = traj.max_dtf_hm1;
        man.invariants["min_dissipation_defect"] = min_defect;
        man.stride_times = traj.times;
    } catch (const SimError& e) {
        man.exit_status = 1;
        const double wall = std::chrono::duration<double>(
                                std::chrono::steady_clock::now() - started).count();
        write_manifest(r, man, wall);
        std::cerr << "numerical failure at step " << e.step << ": " << e.what() << "\n";
        return 1;
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    write_manifest(r, man, wall);
    return 0;
}

int cmd_qc_test(const Resolved& r) {
    QCTestProblem prob;
    prob.energy = make_energy(r.energy, r.d);
    prob.xi = Mat(r.d);  // the origin; pass other base points through the library API
    prob.c0 = r.c0;
    prob.grid = Grid(r.d, r.n, r.t_end, r.dt);
    prob.seed = r.seed;

    ManifestData man;
    const auto started = std::chrono::steady_clock::now();
    const QCVerdict verdict = qc_minimize(prob);
    if (verdict.aborted_restarts == prob.restarts) {
        std::cerr << "numerical failure: every restart aborted on non-finite objective\n";
        return 1;
    }
    json j;
    j["c0"] = r.c0;
    j["energy"] = r.energy;
    j["min_value"] = verdict.min_value;
    j["n"] = verdict.n;
    j["seed"] = r.seed;
    j["status"] = to_string(verdict.status);
    j["xi"] = std::vector<double>(prob.xi.v.begin(),
                                  prob.xi.v.begin() + prob.xi.size());
    write_atomic(fs::path(r.output_dir) / "verdict.json", j.dump(2) + "\n");
    save_field((fs::path(r.output_dir) / "witness.field").string(), verdict.witness);
    std::cout << j.dump(2) << "\n";

    man.invariants["diverged_restarts"] = verdict.diverged_restarts;
    man.invariants["aborted_restarts"] = verdict.aborted_restarts;
    man.invariants["tol"] = verdict.tol;
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    write_manifest(r, man, wall);
    return 0;
}

int cmd_garding(const Resolved& r) {
    const Grid grid(r.d, r.n, r.t_end, r.dt);
    auto w = make_energy(r.energy, r.d);
    Rng rng(r.seed);
    Rng r_ybar = rng.split(), r_samples = rng.split();
    PeriodicField ybar = random_band_limited(grid, Rank::vector, std::max(1, grid.n / 8), r_ybar);
    const double nrm = l2_norm(gradient(ybar));
    if (nrm > 1e-14) ybar *= r.init_amplitude / nrm;

    ManifestData man;
    const auto started = std::chrono::steady_clock::now();
    auto samples = make_garding_samples(ybar, 4, r_samples.next_u64());
    const GardingReport rep = garding_probe(*w, ybar, samples);

    json j;
    j["c0"] = rep.c0;
    j["c1"] = rep.c1;
    j["degenerate_infeasible"] = rep.degenerate_infeasible;
    j["energy"] = r.energy;
    j["feasible"] = rep.feasible;
    j["n"] = r.n;
    j["seed"] = r.seed;
    json arr = json::array();
    for (const auto& s : rep.samples) {
        json e;
        e["g_integral"] = s.g_integral;
        e["lhs"] = s.lhs;
        e["slack"] = s.slack;
        e["v_distance"] = s.v_distance;
        arr.push_back(e);
    }
    j["samples"] = arr;
    write_atomic(fs::path(r.output_dir) / "garding.json", j.dump(2) + "\n");
    std::cout << j.dump(2) << "\n";

    man.invariants["feasible"] = rep.feasible;
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    write_manifest(r, man, wall);
    return 0;
}

int cmd_young_measure(const Resolved& r) {
    constexpr int kCells = 4;
    ManifestData man;
    const auto started = std::chrono::steady_clock::now();
    auto w = make_energy(r.energy, r.d);

    std::vector<PeriodicField> storage;
    std::vector<const PeriodicField*> fields;
    if (!r.reference_dir.empty()) {
        Trajectory traj = load_run(r.reference_dir, nullptr);
        for (auto& s : traj.states) storage.push_back(std::move(s.F));
    } else {
        const Grid grid(r.d, r.n, r.t_end, r.dt);
        storage.push_back(build_init(r, grid).F);
    }
    for (const auto& f : storage) fields.push_back(&f);
    if (fields.front()->grid().n % kCells != 0)
        throw ConfigError("key `n` must be divisible by the macro-cell count " +
                          std::to_string(kCells));

    const auto m = empirical_young_measure(fields, kCells, w->p(), true);
    write_atomic(fs::path(r.output_dir) / "young.json", young_measure_json(m) + "\n");
    {
        std::ofstream os(fs::path(r.output_dir) / "young_hist.csv");
        young_histogram_csv(os, m);
    }
    std::size_t dirac_cells = 0;
    for (const auto& c : m.cell_stats)
        if (is_dirac(c)) ++dirac_cells;
    man.invariants["dirac_cells"] = dirac_cells;
    man.invariants["cells"] = kCells;
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    write_manifest(r, man, wall);
    return 0;
}

int cmd_compare(const Resolved& r, const std::vector<std::string>& positionals) {
    if (positionals.size() != 2)
        throw ConfigError("compare needs two run directories: compare <run_a> <run_b>");
    const json man_a = load_run_manifest(positionals[0]);
    const json man_b = load_run_manifest(positionals[1]);
    for (const char* key : {"d", "n", "dt", "energy"})
        if (man_a.at("config").at(key) != man_b.at("config").at(key))
            throw ConfigError(std::string("mismatched manifests: key `") + key + "` differs");
    if (man_a.at("stride_times") != man_b.at("stride_times"))
        throw ConfigError("mismatched manifests: output times differ");
    const int status_a = man_a.at("exit_status").get<int>();
    const int status_b = man_b.at("exit_status").get<int>();

    std::string energy_name;
    Trajectory a = load_run(positionals[0], &energy_name);
    Trajectory b = load_run(positionals[1], nullptr);
    auto w = make_energy(energy_name, a.states.front().u.grid().d);

    ManifestData man;
    const auto started = std::chrono::steady_clock::now();
    const GronwallReport rep = gronwall_monitor(a, b, *w);

    std::ostringstream csv;
    csv << "t,D,relent,v_distance,y_lhs,y_rhs\n";
    csv.precision(17);
    for (std::size_t i = 0; i < rep.times.size(); ++i) {
        const auto rel = relative_entropy(a.states[i], b.states[i], *w);
        std::vector<double> buf(a.states[i].y.points());
        const auto& ya = a.states[i].y;
        const auto& yb = b.states[i].y;
        for (std::size_t pt = 0; pt < ya.points(); ++pt) {
            double dy2 = 0.0;
            for (int c = 0; c < ya.ncomp(); ++c) {
                const double dv = ya.at(pt, c) - yb.at(pt, c);
                dy2 += dv * dv;
            }
            buf[pt] = dy2 + std::pow(std::sqrt(dy2), w->p());
        }
        const double vdist = pairwise_sum(buf) * ya.grid().cell_volume();
        csv << rep.times[i] << ',' << rep.d_series[i] << ',' << rel.total << ',' << vdist << ','
            << rep.y_lhs[i] << ',' << rep.y_rhs[i] << '\n';
    }
    {
        std::ofstream os(fs::path(r.output_dir) / "compare.csv");
        os << csv.str();
    }
    json j;
    j["d0"] = rep.d0;
    j["lambda_env"] = rep.lambda_env;
    j["lambda_lsq"] = rep.lambda_lsq;
    j["run_a"] = positionals[0];
    j["run_b"] = positionals[1];
    j["y_chain_min_slack"] = rep.y_chain_min_slack;
    write_atomic(fs::path(r.output_dir) / "compare.json", j.dump(2) + "\n");
    std::cout << j.dump(2) << "\n";

    man.invariants["input_exit_status_a"] = status_a;
    man.invariants["input_exit_status_b"] = status_b;
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    write_manifest(r, man, wall);
    return (status_a != 0 || status_b != 0) ? 1 : 0;
}

}  // namespace

int run_experiment(const std::vector<std::string>& args) {
    try {
        const ParsedArgs parsed = parse_args(args);
        const std::set<std::string> subcommands = {"simulate", "qc-test", "garding",
                                                   "young-measure", "compare"};
        if (!subcommands.count(parsed.subcommand))
            throw ConfigError("unknown subcommand `" + parsed.subcommand + "`");
        if (parsed.subcommand != "compare" && !parsed.positionals.empty())
            throw ConfigError("unexpected positional argument `" + parsed.positionals[0] + "`");
        const Resolved r = resolve(parsed);
        fs::create_directories(r.output_dir);
        write_resolved_config(r);
        if (parsed.subcommand == "simulate") return cmd_simulate(r);
        if (parsed.subcommand == "qc-test") return cmd_qc_test(r);
        if (parsed.subcommand == "garding") return cmd_garding(r);
        if (parsed.subcommand == "young-measure") return cmd_young_measure(r);
        return cmd_compare(r, parsed.positionals);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const SimError& e) {
        std::cerr << "numerical failure at step " << e.step << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace eldyn
