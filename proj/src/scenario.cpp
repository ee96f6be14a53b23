#include "pmx/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "pmx/expr.hpp"
#include "pmx/linalg.hpp"

namespace pmx::cli {

namespace {

using nlohmann::json;

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string join_path(const std::string& base, const std::string& key) {
    return base.empty() ? key : base + "." + key;
}

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw ConfigError(path.empty() ? msg : path + ": " + msg);
}

const json& require_field(const json& j, const char* key, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) fail(join_path(path, key), "missing required field");
    return *it;
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* k : allowed)
            if (item.key() == k) { ok = true; break; }
        if (!ok) fail(join_path(path, item.key()), "unknown field");
    }
}

int get_int(const json& j, const std::string& path, long long lo, long long hi) {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    long long v = j.get<long long>();
    if (v < lo || v > hi)
        fail(path, "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return static_cast<int>(v);
}

double get_positive(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    double v = j.get<double>();
    if (!(v > 0.0) || !std::isfinite(v)) fail(path, "must be a positive finite number");
    return v;
}

// Expression leaves may be strings or plain numbers; numbers are converted to
// their shortest round-trip decimal form so round-trips are exact.
std::string expr_text(const json& v, const std::string& path) {
    std::string text;
    if (v.is_string())
        text = v.get<std::string>();
    else if (v.is_number())
        text = format_double(v.get<double>());
    else
        fail(path, "expected an expression string or a number");
    try {
        Expr::parse(text);
    } catch (const ParseError& e) {
        fail(path, e.what());
    }
    return text;
}

std::vector<std::string> parse_string_list(const json& j, const std::string& path,
                                           int expected) {
    if (!j.is_array()) fail(path, "expected an array of expressions");
    if (expected >= 0 && static_cast<int>(j.size()) != expected)
        fail(path, "expected " + std::to_string(expected) + " entries, got " +
                       std::to_string(j.size()));
    std::vector<std::string> out;
    out.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(expr_text(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

std::vector<std::vector<std::string>> parse_matrix(const json& j, const std::string& path,
                                                   int rows, int cols) {
    if (!j.is_array()) fail(path, "expected an array of rows");
    if (static_cast<int>(j.size()) != rows)
        fail(path, "expected " + std::to_string(rows) + " rows, got " +
                       std::to_string(j.size()));
    std::vector<std::vector<std::string>> out;
    out.reserve(rows);
    for (int i = 0; i < rows; ++i)
        out.push_back(parse_string_list(j[i], path + "[" + std::to_string(i) + "]", cols));
    return out;
}

Config::Noise parse_noise(const json& j, const std::string& path, int m) {
    check_keys(j, {"kind", "shape", "scale", "seed"}, path);
    Config::Noise noise;
    noise.kind = require_field(j, "kind", path).is_string()
                     ? j["kind"].get<std::string>()
                     : (fail(join_path(path, "kind"), "expected a string"), "");
    if (noise.kind != "none" && noise.kind != "deterministic" && noise.kind != "random")
        fail(join_path(path, "kind"), "must be one of none, deterministic, random");
    if (noise.kind != "none")
        noise.shape = parse_string_list(require_field(j, "shape", path),
                                        join_path(path, "shape"), m);
    if (j.contains("scale")) noise.scale = get_positive(j["scale"], join_path(path, "scale"));
    if (j.contains("seed")) {
        const json& s = j["seed"];
        if (!s.is_number_integer() || s.get<long long>() < 0)
            fail(join_path(path, "seed"), "expected a non-negative integer");
        noise.seed = s.get<std::uint64_t>();
    }
    return noise;
}

json serialize_noise(const Config::Noise& n) {
    json j;
    j["kind"] = n.kind;
    if (n.kind != "none") j["shape"] = n.shape;
    j["scale"] = n.scale;
    j["seed"] = n.seed;
    return j;
}

json vec_to_json(const Vec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

json mat_to_json(const Mat& m) {
    json a = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        a.push_back(row);
    }
    return a;
}

json grid_json(const Grid& g) {
    return json{{"omega", g.omega()}, {"steps", static_cast<int>(g.steps())}};
}

json tol_json(const observer::Tolerances& t) {
    return json{{"rank_tol", t.rank_tol}, {"feas_tol", t.feas_tol}, {"bvp_tol", t.bvp_tol}};
}

ode::VecFn vector_fn(const TimeVector& tv) {
    return [tv](double t) { return tv(t); };
}

// CSV assembly: one row per grid node, named column blocks after the t column.
std::string make_csv(const Grid& grid,
                     const std::vector<std::pair<std::string, const Mat*>>& blocks) {
    std::string out = "t";
    for (const auto& [prefix, mat] : blocks)
        for (Eigen::Index j = 0; j < mat->cols(); ++j)
            out += "," + prefix + std::to_string(j + 1);
    out += "\n";
    for (int i = 0; i <= grid.steps(); ++i) {
        out += format_double(grid.node(i));
        for (const auto& [prefix, mat] : blocks)
            for (Eigen::Index j = 0; j < mat->cols(); ++j)
                out += "," + format_double((*mat)(static_cast<Eigen::Index>(i), j));
        out += "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sampled observations: CSV ingestion and node realizations of random noise
// are turned into piecewise-linear callables on [0, omega].

struct Samples {
    std::vector<double> t;
    Mat vals;  // one row per sample time
};

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

Samples load_observation_csv(const std::string& file, int m) {
    std::ifstream in(file);
    if (!in) fail("observation.path", "cannot open '" + file + "'");
    std::string line;
    if (!std::getline(in, line)) fail("observation.path", "'" + file + "' is empty");
    auto header = split_csv_line(line);
    if (static_cast<int>(header.size()) != m + 1 || header[0] != "t")
        fail("observation.path", "expected header 't," + std::string("y1..y") +
                                     std::to_string(m) + "' with " + std::to_string(m + 1) +
                                     " columns");
    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (static_cast<int>(fields.size()) != m + 1)
            fail("observation.path", "line " + std::to_string(lineno) + ": expected " +
                                         std::to_string(m + 1) + " fields");
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& f : fields) {
            double v = 0.0;
            auto res = std::from_chars(f.data(), f.data() + f.size(), v);
            if (res.ec != std::errc{} || res.ptr != f.data() + f.size())
                fail("observation.path",
                     "line " + std::to_string(lineno) + ": malformed number '" + f + "'");
            row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    if (rows.size() < 2) fail("observation.path", "need at least two sample rows");
    Samples s;
    s.t.reserve(rows.size());
    s.vals.resize(static_cast<Eigen::Index>(rows.size()), m);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        s.t.push_back(rows[i][0]);
        if (i > 0 && !(s.t[i] > s.t[i - 1]))
            fail("observation.path", "sample times must be strictly increasing");
        for (int j = 0; j < m; ++j) s.vals(static_cast<Eigen::Index>(i), j) = rows[i][j + 1];
    }
    return s;
}

ode::VecFn interpolant(Samples s) {
    auto shared = std::make_shared<Samples>(std::move(s));
    return [shared](double t) {
        const auto& ts = shared->t;
        const Mat& v = shared->vals;
        if (t <= ts.front()) return Vec(v.row(0).transpose());
        if (t >= ts.back()) return Vec(v.row(v.rows() - 1).transpose());
        auto it = std::upper_bound(ts.begin(), ts.end(), t);
        std::size_t hi = static_cast<std::size_t>(it - ts.begin());
        std::size_t lo = hi - 1;
        double w = (t - ts[lo]) / (ts[hi] - ts[lo]);
        return Vec((1.0 - w) * v.row(lo).transpose() + w * v.row(hi).transpose());
    };
}

// Node realization of a random noise model, matching the generator used by
// simulate_observation: one normal draw per node per channel, node-major.
Mat realize_random_noise(const Config::Noise& noise, int m, const Grid& grid) {
    TimeVector shape = TimeVector::parse(noise.shape);
    std::mt19937_64 rng(noise.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Mat eta(static_cast<Eigen::Index>(grid.steps() + 1), m);
    for (int i = 0; i <= grid.steps(); ++i) {
        Vec sh = shape(grid.node(i));
        for (int j = 0; j < m; ++j)
            eta(static_cast<Eigen::Index>(i), j) = noise.scale * sh[j] * gauss(rng);
    }
    return eta;
}

struct BuiltObservation {
    ode::VecFn y;
    std::vector<std::string> warnings;
};

ode::VecFn add_noise(ode::VecFn base, const Config::Noise& noise, int m, const Grid& grid,
                     std::vector<std::string>& warnings) {
    if (noise.kind == "none") return base;
    if (noise.kind == "deterministic") {
        TimeVector shape = TimeVector::parse(noise.shape);
        double scale = noise.scale;
        return [base, shape, scale](double t) { return Vec(base(t) + scale * shape(t)); };
    }
    Samples s;
    s.t.reserve(grid.steps() + 1);
    for (int i = 0; i <= grid.steps(); ++i) s.t.push_back(grid.node(i));
    s.vals = realize_random_noise(noise, m, grid);
    warnings.push_back(
        "random ingest noise is realized on grid nodes and linearly interpolated in "
        "between");
    ode::VecFn eta = interpolant(std::move(s));
    return [base, eta](double t) { return Vec(base(t) + eta(t)); };
}

observer::NoiseModel build_noise_model(const Config::Noise& noise) {
    observer::NoiseModel model;
    if (noise.kind == "deterministic")
        model.kind = observer::NoiseModel::Kind::deterministic;
    else if (noise.kind == "random")
        model.kind = observer::NoiseModel::Kind::random;
    else
        model.kind = observer::NoiseModel::Kind::none;
    if (model.kind != observer::NoiseModel::Kind::none)
        model.shape = vector_fn(TimeVector::parse(noise.shape));
    model.scale = noise.scale;
    model.seed = noise.seed;
    return model;
}

observer::Observation run_simulate_block(const Config& cfg, const observer::System& sys,
                                         const Grid& grid, const observer::Tolerances& tol) {
    const auto& sim = *cfg.observation->simulate;
    ode::VecFn f = vector_fn(TimeVector::parse(sim.f));
    ode::VecFn kernel;
    const ode::VecFn* kptr = nullptr;
    if (sim.kernel_component) {
        kernel = vector_fn(TimeVector::parse(*sim.kernel_component));
        kptr = &kernel;
    }
    observer::NoiseModel noise = build_noise_model(sim.noise);
    return observer::simulate_observation(sys, f, kptr, noise, grid, tol,
                                          sim.allow_nonperiodic);
}

BuiltObservation build_observation(const Config& cfg, const observer::System& sys,
                                   const Grid& grid, const observer::Tolerances& tol) {
    if (!cfg.observation)
        fail("observation", "required by this command");
    const auto& obs = *cfg.observation;
    BuiltObservation built;
    if (!obs.y.empty()) {
        built.y = vector_fn(TimeVector::parse(obs.y));
    } else if (!obs.path.empty()) {
        Samples s = load_observation_csv(obs.path, sys.m);
        double w = grid.omega();
        double slack = 1e-9 * std::max(1.0, w);
        if (s.t.front() > slack || s.t.back() < w - slack)
            fail("observation.path", "samples must cover [0, " + format_double(w) + "]");
        bool matches_grid = static_cast<int>(s.t.size()) == grid.steps() + 1;
        if (matches_grid)
            for (std::size_t i = 0; i < s.t.size(); ++i)
                if (std::abs(s.t[i] - grid.node(i)) > 1e-12 * std::max(1.0, w)) {
                    matches_grid = false;
                    break;
                }
        if (!matches_grid)
            built.warnings.push_back(
                "observation samples (" + std::to_string(s.t.size()) +
                ") do not coincide with the working grid nodes (" +
                std::to_string(grid.steps() + 1) + "); linear interpolation applied");
        built.y = interpolant(std::move(s));
    } else if (obs.simulate) {
        observer::Observation sim = run_simulate_block(cfg, sys, grid, tol);
        Samples s;
        s.t.reserve(grid.steps() + 1);
        for (int i = 0; i <= grid.steps(); ++i) s.t.push_back(grid.node(i));
        s.vals = sim.y;
        built.warnings.push_back(
            "observation taken from the simulation block; node samples are linearly "
            "interpolated between grid nodes");
        built.y = interpolant(std::move(s));
    } else {
        fail("observation", "needs one of y, path, or simulate");
    }
    if (obs.noise) built.y = add_noise(built.y, *obs.noise, sys.m, grid, built.warnings);
    return built;
}

std::string verdict_line(const observer::FeasibilityReport& rep) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s: defect %.6g %s threshold %.6g",
                  rep.feasible ? "feasible" : "infeasible", rep.defect,
                  rep.feasible ? "<=" : ">", rep.threshold);
    return buf;
}

// ---------------------------------------------------------------------------
// Expected-value tables for the builtin scenarios.

struct Row {
    std::string name;
    double value = 0.0;
    std::string criterion;
    bool pass = false;
};

json rows_to_json(const std::string& name, const std::vector<Row>& rows, bool all_pass) {
    json jr = json::array();
    for (const auto& r : rows) {
        json item{{"name", r.name}, {"criterion", r.criterion}, {"pass", r.pass}};
        if (std::isfinite(r.value))
            item["value"] = r.value;
        else
            item["value"] = "inf";
        jr.push_back(item);
    }
    return json{{"command", "examples"}, {"name", name}, {"rows", jr}, {"pass", all_pass}};
}

std::string rows_to_table(const std::string& name, const std::vector<Row>& rows) {
    std::string out = "scenario '" + name + "'\n";
    int passed = 0;
    for (const auto& r : rows) {
        char buf[200];
        std::snprintf(buf, sizeof buf, "  [%s] %-58s %-13.6g %s\n",
                      r.pass ? "PASS" : "FAIL", r.name.c_str(), r.value,
                      r.criterion.c_str());
        out += buf;
        if (r.pass) ++passed;
    }
    out += std::to_string(passed) + "/" + std::to_string(rows.size()) + " rows pass\n";
    return out;
}

std::vector<Row> examples_worked(const std::string& which) {
    Config cfg = builtin_config(which);
    observer::System sys = build_system(cfg);
    Grid grid = build_grid(cfg);
    observer::Tolerances tol = build_tolerances(cfg);
    ode::VecFn ell = build_functional(cfg);
    const double w = grid.omega();
    std::vector<Row> rows;

    auto F = ode::propagate_fundamental(sys.A, sys.n, grid);
    ode::MatFn adjoint = [A = sys.A](double t) { return Mat(-A(t).transpose()); };
    auto G = ode::propagate_fundamental(adjoint, sys.n, grid);
    auto closed_F = [](double t) {
        Mat M(2, 2);
        M << std::exp(t), 0.0, std::exp(t) - 1.0, 1.0;
        return M;
    };
    auto closed_G = [](double t) {
        Mat M(2, 2);
        M << std::exp(-t), std::exp(-t) - 1.0, 0.0, 1.0;
        return M;
    };
    std::vector<int> probes{0, static_cast<int>(std::lround(1.0 / grid.step())),
                            grid.steps()};
    double errF = 0.0, errG = 0.0;
    for (int i : probes) {
        errF = std::max(errF, (F[i] - closed_F(grid.node(i))).cwiseAbs().maxCoeff());
        errG = std::max(errG, (G[i] - closed_G(grid.node(i))).cwiseAbs().maxCoeff());
    }
    rows.push_back({"state fundamental matrix matches closed form", errF, "<= 1e-7",
                    errF <= 1e-7});
    rows.push_back({"adjoint fundamental matrix matches closed form", errG, "<= 1e-7",
                    errG <= 1e-7});

    Mat P = observer::compute_P(sys, grid, tol.rank_tol);
    Mat Pref(2, 2);
    Pref << 0, 0, 0, 1;
    double errP = (P - Pref).cwiseAbs().maxCoeff();
    rows.push_back({"projector equals diag(0, 1)", errP, "<= 1e-8", errP <= 1e-8});

    Mat W = observer::compute_W(sys, grid, tol.rank_tol);
    double errW = W.cwiseAbs().maxCoeff();
    rows.push_back({"projected gramian vanishes", errW, "<= 1e-8", errW <= 1e-8});

    Mat h = observer::compute_h(sys, ell, grid);
    Vec h_end = h.row(h.rows() - 1).transpose();
    Vec h_ref(2);
    if (which == "thm3-l1")
        h_ref << 0.5 - std::exp(-w) / 2.0 - w, w;
    else
        h_ref << 0.0, 0.0;
    double errh = (h_end - h_ref).norm();
    rows.push_back({"adjoint response at the horizon matches closed form", errh, "<= 1e-6",
                    errh <= 1e-6});

    observer::FeasibilityReport rep = observer::check_feasibility(sys, ell, grid, tol);
    observer::MinimaxEstimate est = observer::solve_estimator(sys, ell, grid, tol);
    if (which == "thm3-l1") {
        rows.push_back({"verdict is infeasible", rep.defect, "defect > threshold",
                        !rep.feasible});
        double def_err = std::abs(rep.defect - w);
        rows.push_back({"orthogonality defect equals the horizon", def_err, "<= 1e-3",
                        def_err <= 1e-3});
        rows.push_back({"guaranteed error is infinite",
                        est.finite ? est.sigma : std::numeric_limits<double>::infinity(),
                        "sigma = inf", !est.finite});
    } else {
        rows.push_back({"verdict is feasible", rep.defect, "defect <= threshold",
                        rep.feasible});
        double sig_err = est.finite ? std::abs(est.sigma - std::numbers::pi)
                                    : std::numeric_limits<double>::infinity();
        rows.push_back({"guaranteed error matches the regression baseline", sig_err,
                        "|sigma - 3.141592653589793| <= 1e-9",
                        est.finite && sig_err <= 1e-9});
        double usup = est.finite ? est.u.cwiseAbs().maxCoeff()
                                 : std::numeric_limits<double>::infinity();
        rows.push_back({"estimator kernel vanishes", usup, "<= 1e-6",
                        est.finite && usup <= 1e-6});
    }
    return rows;
}

std::vector<Row> examples_oscillator() {
    Config cfg = builtin_config("example1");
    observer::System sys = build_system(cfg);
    Grid grid = build_grid(cfg);
    observer::Tolerances tol = build_tolerances(cfg);
    std::vector<Row> rows;

    observer::ObservabilityReport diag =
        observer::observability_diagnostic(sys, grid, tol.rank_tol);
    rows.push_back({"periodic kernel dimension", static_cast<double>(diag.kernel_dim),
                    "= 2", diag.kernel_dim == 2});
    double lam_min = diag.kernel_dim > 0 ? diag.gram_spectrum[diag.kernel_dim - 1] : -1.0;
    double weak = std::sqrt(std::max(0.0, lam_min));
    rows.push_back({"one kernel direction is invisible", weak, "||H psi|| <= 1e-6",
                    diag.kernel_dim == 2 && weak <= 1e-6});
    double lam_max = diag.kernel_dim > 0 ? diag.gram_spectrum[0] : -1.0;
    double strong_ref = 2.0 * std::numbers::pi * (1.0 / 400.0 + 1.0 / 4.0);
    double strong_err = std::abs(lam_max - strong_ref);
    rows.push_back({"visible direction has the expected energy", strong_err, "<= 1e-4",
                    diag.kernel_dim == 2 && strong_err <= 1e-4});

    BuiltObservation built = build_observation(cfg, sys, grid, tol);
    observer::StateEstimate est = observer::solve_reconstruction(sys, built.y, grid, tol);
    TimeVector truth = TimeVector::parse(*cfg.truth_x);
    Mat X(est.x.rows(), est.x.cols());
    for (int i = 0; i <= grid.steps(); ++i)
        X.row(static_cast<Eigen::Index>(i)) = truth(grid.node(i)).transpose();
    double err = ode::l2_norm(grid, Mat(est.x - X));
    rows.push_back({"reconstruction error norm", err, "in [1.83, 1.90]",
                    err >= 1.83 && err <= 1.90});

    observer::Observation sim = run_simulate_block(cfg, sys, grid, tol);
    TimeVector printed = TimeVector::parse(cfg.observation->y);
    double ydiff = 0.0;
    for (int i = 0; i <= grid.steps(); ++i) {
        Vec ref = printed(grid.node(i));
        ydiff = std::max(
            ydiff,
            (sim.y.row(static_cast<Eigen::Index>(i)).transpose() - ref).cwiseAbs().maxCoeff());
    }
    rows.push_back({"simulated observation matches the recorded signal", ydiff, "<= 1e-4",
                    ydiff <= 1e-4});
    return rows;
}

}  // namespace

// ---------------------------------------------------------------------------

Config parse_config(const json& j) {
    Config cfg;
    check_keys(j, {"system", "grid", "functional", "observation", "truth", "tolerances"},
               "");
    const json& sys = require_field(j, "system", "");
    check_keys(sys, {"n", "r", "m", "omega", "A", "B", "H"}, "system");
    cfg.n = get_int(require_field(sys, "n", "system"), "system.n", 1, 64);
    cfg.r = get_int(require_field(sys, "r", "system"), "system.r", 1, 64);
    cfg.m = get_int(require_field(sys, "m", "system"), "system.m", 1, 64);
    cfg.omega = expr_text(require_field(sys, "omega", "system"), "system.omega");
    double w = Expr::parse(cfg.omega)(0.0);
    if (!(w > 0.0) || !std::isfinite(w)) fail("system.omega", "must evaluate to a positive number");
    cfg.A = parse_matrix(require_field(sys, "A", "system"), "system.A", cfg.n, cfg.n);
    cfg.B = parse_matrix(require_field(sys, "B", "system"), "system.B", cfg.n, cfg.r);
    cfg.H = parse_matrix(require_field(sys, "H", "system"), "system.H", cfg.m, cfg.n);

    if (j.contains("grid")) {
        const json& grid = j["grid"];
        check_keys(grid, {"steps"}, "grid");
        cfg.grid_steps = get_int(require_field(grid, "steps", "grid"), "grid.steps", 2,
                                 1 << 22);
        if (cfg.grid_steps % 2 != 0) fail("grid.steps", "must be even");
    }

    if (j.contains("functional")) {
        const json& fn = j["functional"];
        check_keys(fn, {"l"}, "functional");
        cfg.functional =
            parse_string_list(require_field(fn, "l", "functional"), "functional.l", cfg.n);
    }

    if (j.contains("observation")) {
        const json& ob = j["observation"];
        check_keys(ob, {"y", "path", "noise", "simulate"}, "observation");
        Config::Observation obs;
        if (ob.contains("y"))
            obs.y = parse_string_list(ob["y"], "observation.y", cfg.m);
        if (ob.contains("path")) {
            if (!ob["path"].is_string()) fail("observation.path", "expected a string");
            obs.path = ob["path"].get<std::string>();
            if (obs.path.empty()) fail("observation.path", "must not be empty");
        }
        if (!obs.y.empty() && !obs.path.empty())
            fail("observation", "y and path are mutually exclusive");
        if (ob.contains("noise"))
            obs.noise = parse_noise(ob["noise"], "observation.noise", cfg.m);
        if (ob.contains("simulate")) {
            const json& sim = ob["simulate"];
            check_keys(sim, {"f", "kernel_component", "noise", "allow_nonperiodic"},
                       "observation.simulate");
            Config::Simulate s;
            s.f = parse_string_list(require_field(sim, "f", "observation.simulate"),
                                    "observation.simulate.f", cfg.r);
            if (sim.contains("kernel_component"))
                s.kernel_component = parse_string_list(
                    sim["kernel_component"], "observation.simulate.kernel_component",
                    cfg.n);
            if (sim.contains("noise"))
                s.noise = parse_noise(sim["noise"], "observation.simulate.noise", cfg.m);
            if (sim.contains("allow_nonperiodic")) {
                if (!sim["allow_nonperiodic"].is_boolean())
                    fail("observation.simulate.allow_nonperiodic", "expected a boolean");
                s.allow_nonperiodic = sim["allow_nonperiodic"].get<bool>();
            }
            obs.simulate = std::move(s);
        }
        if (obs.y.empty() && obs.path.empty() && !obs.simulate)
            fail("observation", "needs one of y, path, or simulate");
        cfg.observation = std::move(obs);
    }

    if (j.contains("truth")) {
        const json& tr = j["truth"];
        check_keys(tr, {"x"}, "truth");
        cfg.truth_x = parse_string_list(require_field(tr, "x", "truth"), "truth.x", cfg.n);
    }

    if (j.contains("tolerances")) {
        const json& tl = j["tolerances"];
        check_keys(tl, {"rank_tol", "feas_tol", "bvp_tol"}, "tolerances");
        if (tl.contains("rank_tol"))
            cfg.rank_tol = get_positive(tl["rank_tol"], "tolerances.rank_tol");
        if (tl.contains("feas_tol"))
            cfg.feas_tol = get_positive(tl["feas_tol"], "tolerances.feas_tol");
        if (tl.contains("bvp_tol"))
            cfg.bvp_tol = get_positive(tl["bvp_tol"], "tolerances.bvp_tol");
    }
    return cfg;
}

json serialize_config(const Config& cfg) {
    json j;
    j["system"] = json{{"n", cfg.n},     {"r", cfg.r}, {"m", cfg.m}, {"omega", cfg.omega},
                       {"A", cfg.A},     {"B", cfg.B}, {"H", cfg.H}};
    j["grid"] = json{{"steps", cfg.grid_steps}};
    if (cfg.functional) j["functional"] = json{{"l", *cfg.functional}};
    if (cfg.observation) {
        const auto& obs = *cfg.observation;
        json ob;
        if (!obs.y.empty()) ob["y"] = obs.y;
        if (!obs.path.empty()) ob["path"] = obs.path;
        if (obs.noise) ob["noise"] = serialize_noise(*obs.noise);
        if (obs.simulate) {
            const auto& s = *obs.simulate;
            json sim;
            sim["f"] = s.f;
            if (s.kernel_component) sim["kernel_component"] = *s.kernel_component;
            sim["noise"] = serialize_noise(s.noise);
            sim["allow_nonperiodic"] = s.allow_nonperiodic;
            ob["simulate"] = sim;
        }
        j["observation"] = ob;
    }
    if (cfg.truth_x) j["truth"] = json{{"x", *cfg.truth_x}};
    j["tolerances"] = json{{"rank_tol", cfg.rank_tol},
                           {"feas_tol", cfg.feas_tol},
                           {"bvp_tol", cfg.bvp_tol}};
    return j;
}

std::vector<std::string> builtin_names() { return {"thm3-l1", "thm3-l2", "example1"}; }

Config builtin_config(const std::string& name) {
    if (name == "thm3-l1" || name == "thm3-l2") {
        Config c;
        c.n = c.r = c.m = 2;
        c.omega = "2*pi";
        c.A = {{"1", "0"}, {"1", "0"}};
        c.B = {{"1", "0"}, {"0", "1"}};
        c.H = {{"1", "0"}, {"0", "0"}};
        c.grid_steps = 2048;
        if (name == "thm3-l1")
            c.functional = std::vector<std::string>{"sin(t)", "1"};
        else
            c.functional = std::vector<std::string>{"sin(t)", "cos(t)"};
        return c;
    }
    if (name == "example1") {
        Config c;
        c.n = c.r = c.m = 2;
        c.omega = "2*pi";
        c.A = {{"0", "-1"}, {"1", "0"}};
        c.B = {{"1", "0"}, {"0", "1"}};
        c.H = {{"cos(t)/20", "sin(t)/20"}, {"cos(t)/2", "sin(t)/2"}};
        c.grid_steps = 2048;
        Config::Observation obs;
        obs.y = {"0.05 + 0.0159155*t + 0.1*sin(t)", "0.5 + 0.159155*t + 0.1*sin(t)"};
        Config::Noise ingest;
        ingest.kind = "deterministic";
        ingest.shape = {"0.1*sin(t)", "0.1*sin(t)"};
        obs.noise = ingest;
        Config::Simulate sim;
        sim.f = {"cos(t)/pi", "sin(t)/pi"};
        sim.kernel_component = std::vector<std::string>{"cos(t)", "sin(t)"};
        sim.noise.kind = "deterministic";
        sim.noise.shape = {"0.1*sin(t)", "0.1*sin(t)"};
        sim.allow_nonperiodic = true;
        obs.simulate = std::move(sim);
        c.observation = std::move(obs);
        c.truth_x = std::vector<std::string>{"cos(t) + t*cos(t)/pi - sin(t)/2",
                                             "cos(t)/2 + sin(t) + t*sin(t)/pi"};
        return c;
    }
    throw ConfigError("unknown builtin scenario '" + name +
                      "' (available: thm3-l1, thm3-l2, example1)");
}

observer::System build_system(const Config& cfg) {
    observer::System sys;
    sys.n = cfg.n;
    sys.r = cfg.r;
    sys.m = cfg.m;
    TimeMatrix A = TimeMatrix::parse(cfg.A);
    TimeMatrix B = TimeMatrix::parse(cfg.B);
    TimeMatrix H = TimeMatrix::parse(cfg.H);
    sys.A = [A](double t) { return A(t); };
    sys.B = [B](double t) { return B(t); };
    sys.H = [H](double t) { return H(t); };
    return sys;
}

Grid build_grid(const Config& cfg) {
    double w = Expr::parse(cfg.omega)(0.0);
    return Grid(w, static_cast<std::size_t>(cfg.grid_steps));
}

observer::Tolerances build_tolerances(const Config& cfg) {
    observer::Tolerances tol;
    tol.rank_tol = cfg.rank_tol;
    tol.feas_tol = cfg.feas_tol;
    tol.bvp_tol = cfg.bvp_tol;
    return tol;
}

ode::VecFn build_functional(const Config& cfg) {
    if (!cfg.functional) fail("functional.l", "required by this command");
    return vector_fn(TimeVector::parse(*cfg.functional));
}

CommandResult run_check(const Config& cfg) {
    observer::System sys = build_system(cfg);
    Grid grid = build_grid(cfg);
    observer::Tolerances tol = build_tolerances(cfg);
    ode::VecFn ell = build_functional(cfg);
    observer::FeasibilityReport rep = observer::check_feasibility(sys, ell, grid, tol);

    CommandResult res;
    res.report = json{{"command", "check"},
                      {"feasible", rep.feasible},
                      {"defect", rep.defect},
                      {"threshold", rep.threshold},
                      {"h_end", vec_to_json(rep.h_end)},
                      {"Ph_end", vec_to_json(rep.Ph_end)},
                      {"P", mat_to_json(rep.P)},
                      {"W", mat_to_json(rep.W)},
                      {"W_nullspace_dim", static_cast<int>(rep.W_nullspace.cols())},
                      {"grid", grid_json(grid)},
                      {"tolerances", tol_json(tol)}};
    res.human = verdict_line(rep);
    res.exit_code = rep.feasible ? 0 : 2;
    return res;
}

CommandResult run_estimate(const Config& cfg) {
    observer::System sys = build_system(cfg);
    Grid grid = build_grid(cfg);
    observer::Tolerances tol = build_tolerances(cfg);
    ode::VecFn ell = build_functional(cfg);
    observer::FeasibilityReport rep = observer::check_feasibility(sys, ell, grid, tol);
    observer::MinimaxEstimate est = observer::solve_estimator(sys, ell, grid, tol);

    CommandResult res;
    res.report = json{{"command", "estimate"},
                      {"finite", est.finite},
                      {"sigma", est.finite ? json(est.sigma) : json("inf")},
                      {"sigma_clamped", est.sigma_clamped},
                      {"kernel_dim", static_cast<int>(est.kernel.size())},
                      {"residual", est.residual},
                      {"feasibility",
                       json{{"feasible", rep.feasible},
                            {"defect", rep.defect},
                            {"threshold", rep.threshold}}},
                      {"grid", grid_json(grid)},
                      {"tolerances", tol_json(tol)}};
    if (est.finite) {
        res.trajectory_csv =
            make_csv(grid, {{"u", &est.u}, {"p", &est.p}, {"z", &est.z}});
        char buf[120];
        std::snprintf(buf, sizeof buf, "sigma %.12g%s", est.sigma,
                      est.sigma_clamped ? " (clamped to zero)" : "");
        res.human = buf;
        res.exit_code = 0;
    } else {
        res.human = "sigma inf (functional not estimable with finite guaranteed error)";
        res.exit_code = 2;
    }
    return res;
}

CommandResult run_reconstruct(const Config& cfg) {
    observer::System sys = build_system(cfg);
    Grid grid = build_grid(cfg);
    observer::Tolerances tol = build_tolerances(cfg);
    BuiltObservation built = build_observation(cfg, sys, grid, tol);
    observer::StateEstimate est = observer::solve_reconstruction(sys, built.y, grid, tol);

    CommandResult res;
    res.report = json{{"command", "reconstruct"},
                      {"residual", est.residual},
                      {"kernel_dim", static_cast<int>(est.kernel.size())},
                      {"grid", grid_json(grid)},
                      {"tolerances", tol_json(tol)},
                      {"warnings", built.warnings}};
    std::string summary = "reconstructed state on " +
                          std::to_string(grid.steps() + 1) + " nodes";
    if (cfg.truth_x) {
        TimeVector truth = TimeVector::parse(*cfg.truth_x);
        Mat X(est.x.rows(), est.x.cols());
        for (int i = 0; i <= grid.steps(); ++i)
            X.row(static_cast<Eigen::Index>(i)) = truth(grid.node(i)).transpose();
        double err = ode::l2_norm(grid, Mat(est.x - X));
        res.report["error_norm"] = err;
        res.report["truth_norm"] = ode::l2_norm(grid, X);
        char buf[80];
        std::snprintf(buf, sizeof buf, "; error_norm %.6g", err);
        summary += buf;
    }
    if (cfg.functional) {
        ode::VecFn ell = build_functional(cfg);
        Mat L(est.x.rows(), est.x.cols());
        for (int i = 0; i <= grid.steps(); ++i)
            L.row(static_cast<Eigen::Index>(i)) = ell(grid.node(i)).transpose();
        res.report["functional_estimate"] = observer::functional_value(grid, L, est.x);
    }
    res.trajectory_csv = make_csv(grid, {{"x", &est.x}, {"p", &est.p}});
    res.human = summary;
    res.exit_code = 0;
    return res;
}

CommandResult run_simulate(const Config& cfg) {
    observer::System sys = build_system(cfg);
    Grid grid = build_grid(cfg);
    observer::Tolerances tol = build_tolerances(cfg);
    if (!cfg.observation || !cfg.observation->simulate)
        fail("observation.simulate", "required by 'simulate'");
    observer::Observation obs = run_simulate_block(cfg, sys, grid, tol);

    CommandResult res;
    res.report = json{{"command", "simulate"},
                      {"f_norm", obs.f_norm},
                      {"f_admissible", obs.f_admissible},
                      {"noise_trace", obs.noise_trace},
                      {"noise_admissible", obs.noise_admissible},
                      {"periodic", obs.periodic},
                      {"residual", obs.residual},
                      {"seed", cfg.observation->simulate->noise.seed},
                      {"grid", grid_json(grid)}};
    res.observation_csv = make_csv(grid, {{"y", &obs.y}});
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "input norm %.6g (admissible: %s), noise trace %.6g (admissible: %s)%s",
                  obs.f_norm, obs.f_admissible ? "yes" : "no", obs.noise_trace,
                  obs.noise_admissible ? "yes" : "no",
                  obs.periodic ? "" : "; state is non-periodic (least-squares trajectory)");
    res.human = buf;
    res.exit_code = 0;
    return res;
}

CommandResult run_examples(const std::string& name) {
    std::vector<Row> rows;
    if (name == "thm3-l1" || name == "thm3-l2")
        rows = examples_worked(name);
    else if (name == "example1")
        rows = examples_oscillator();
    else
        throw ConfigError("unknown builtin scenario '" + name +
                          "' (available: thm3-l1, thm3-l2, example1)");
    bool all_pass = std::all_of(rows.begin(), rows.end(),
                                [](const Row& r) { return r.pass; });
    CommandResult res;
    res.report = rows_to_json(name, rows, all_pass);
    res.human = rows_to_table(name, rows);
    res.exit_code = all_pass ? 0 : 1;
    return res;
}

}  // namespace pmx::cli
