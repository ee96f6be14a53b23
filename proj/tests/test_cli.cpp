#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "pmx/scenario.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

struct RunResult {
    int exit_code = -1;
    std::string out, err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Unique scratch directory per test case, removed when the case ends.
class Workspace {
public:
    explicit Workspace(const std::string& tag) {
        dir_ = fs::temp_directory_path() /
               ("pmx_cli_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    ~Workspace() {
        std::error_code ec;
        fs::remove_all(dir_, ec);
    }
    fs::path path(const std::string& name) const { return dir_ / name; }
    std::string dir(const std::string& name) const { return (dir_ / name).string(); }

    RunResult run(const std::string& args) {
        fs::path out = dir_ / ("stdout_" + std::to_string(counter_) + ".txt");
        fs::path err = dir_ / ("stderr_" + std::to_string(counter_) + ".txt");
        ++counter_;
        std::string cmd = std::string(PMX_CLI_BIN) + " " + args + " >" + out.string() +
                          " 2>" + err.string();
        int rc = std::system(cmd.c_str());
        RunResult res;
        res.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
        res.out = slurp(out);
        res.err = slurp(err);
        return res;
    }

    void write(const std::string& name, const std::string& contents) {
        std::ofstream f(path(name), std::ios::binary);
        f << contents;
    }

private:
    fs::path dir_;
    int counter_ = 0;
};

json read_report(const Workspace& ws, const std::string& subdir) {
    return json::parse(slurp(ws.path(subdir + "/report.json")));
}

bool mentions(const std::string& text, const std::string& needle) {
    return text.find(needle) != std::string::npos;
}

int count_lines(const std::string& text) {
    int n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

std::string stable_random_noise_config(std::uint64_t seed) {
    json j = json::parse(R"({
        "system": {
            "n": 2, "r": 2, "m": 2, "omega": "2*pi",
            "A": [["-1", "0"], ["0", "-1"]],
            "B": [["1", "0"], ["0", "1"]],
            "H": [["1", "0"], ["0", "1"]]
        },
        "grid": {"steps": 128},
        "observation": {
            "simulate": {
                "f": ["0", "0"],
                "noise": {"kind": "random", "shape": ["1", "1"], "scale": 0.3, "seed": 0}
            }
        }
    })");
    j["observation"]["simulate"]["noise"]["seed"] = seed;
    return j.dump(2);
}

}  // namespace

TEST_CASE("cli: examples verdicts drive the exit code") {
    Workspace ws("examples");
    auto ok = ws.run("examples thm3-l1 --out " + ws.dir("a"));
    CHECK(ok.exit_code == 0);
    CHECK(mentions(ok.out, "[PASS]"));
    CHECK(!mentions(ok.out, "[FAIL]"));
    json rep = read_report(ws, "a");
    CHECK(rep["pass"].get<bool>());
    CHECK(rep["rows"].size() == 8);

    auto bad = ws.run("examples not-a-scenario --out " + ws.dir("b"));
    CHECK(bad.exit_code == 1);
    CHECK(mentions(bad.err, "not-a-scenario"));
}

TEST_CASE("cli: infeasibility surfaces as exit code 2") {
    Workspace ws("infeasible");
    auto check = ws.run("check --config thm3-l1 --out " + ws.dir("check"));
    CHECK(check.exit_code == 2);
    CHECK(mentions(check.out, "infeasible"));
    json crep = read_report(ws, "check");
    CHECK(!crep["feasible"].get<bool>());

    auto est = ws.run("estimate --config thm3-l1 --out " + ws.dir("est"));
    CHECK(est.exit_code == 2);
    json erep = read_report(ws, "est");
    CHECK(erep["sigma"].is_string());
    CHECK(erep["sigma"].get<std::string>() == "inf");
    CHECK(!fs::exists(ws.path("est/trajectory.csv")));
}

TEST_CASE("cli: estimate writes the report and the trajectory") {
    Workspace ws("estimate");
    auto res = ws.run("estimate --config thm3-l2 --out " + ws.dir("out"));
    CHECK(res.exit_code == 0);
    CHECK(mentions(res.out, "sigma"));
    json rep = read_report(ws, "out");
    CHECK(rep["finite"].get<bool>());
    CHECK(rep["sigma"].get<double>() == doctest::Approx(kPi).epsilon(1e-9));
    CHECK(rep["kernel_dim"].get<int>() == 1);
    std::string traj = slurp(ws.path("out/trajectory.csv"));
    CHECK(traj.rfind("t,u1,u2,p1,p2,z1,z2\n", 0) == 0);
    CHECK(count_lines(traj) == 2050);
}

TEST_CASE("cli: grid override is honored and validated") {
    Workspace ws("gridsteps");
    auto res = ws.run("estimate --config thm3-l2 --grid-steps 256 --out " + ws.dir("out"));
    CHECK(res.exit_code == 0);
    json rep = read_report(ws, "out");
    CHECK(rep["grid"]["steps"].get<int>() == 256);
    CHECK(rep["sigma"].get<double>() == doctest::Approx(kPi).epsilon(1e-6));

    auto odd = ws.run("estimate --config thm3-l2 --grid-steps 3 --out " + ws.dir("bad"));
    CHECK(odd.exit_code == 1);
    CHECK(mentions(odd.err, "--grid-steps"));
}

TEST_CASE("cli: reconstruct reproduces the recorded error norm") {
    Workspace ws("reconstruct");
    auto res = ws.run("reconstruct --config example1 --out " + ws.dir("out"));
    CHECK(res.exit_code == 0);
    CHECK(mentions(res.out, "error_norm"));
    json rep = read_report(ws, "out");
    double err = rep["error_norm"].get<double>();
    CHECK(err >= 1.83);
    CHECK(err <= 1.90);
    std::string traj = slurp(ws.path("out/trajectory.csv"));
    CHECK(traj.rfind("t,x1,x2,p1,p2\n", 0) == 0);
    CHECK(count_lines(traj) == 2050);
}

TEST_CASE("cli: simulate writes observation samples") {
    Workspace ws("simulate");
    auto res = ws.run("simulate --config example1 --out " + ws.dir("out"));
    CHECK(res.exit_code == 0);
    json rep = read_report(ws, "out");
    CHECK(!rep["periodic"].get<bool>());  // drift input, allow_nonperiodic
    CHECK(rep["seed"].get<std::uint64_t>() == 0);
    std::string obs = slurp(ws.path("out/observation.csv"));
    CHECK(obs.rfind("t,y1,y2\n", 0) == 0);
    CHECK(count_lines(obs) == 2050);
}

TEST_CASE("cli: the noise seed is reproducible and overridable") {
    Workspace ws("seed");
    ws.write("rnd.json", stable_random_noise_config(7));
    std::string cfg = ws.path("rnd.json").string();

    auto a = ws.run("simulate --config " + cfg + " --out " + ws.dir("a"));
    auto b = ws.run("simulate --config " + cfg + " --out " + ws.dir("b"));
    REQUIRE(a.exit_code == 0);
    REQUIRE(b.exit_code == 0);
    std::string ya = slurp(ws.path("a/observation.csv"));
    std::string yb = slurp(ws.path("b/observation.csv"));
    CHECK(ya == yb);

    auto c = ws.run("simulate --config " + cfg + " --seed 8 --out " + ws.dir("c"));
    REQUIRE(c.exit_code == 0);
    CHECK(read_report(ws, "c")["seed"].get<std::uint64_t>() == 8);
    CHECK(slurp(ws.path("c/observation.csv")) != ya);

    auto d = ws.run("simulate --config " + cfg + " --seed 7 --out " + ws.dir("d"));
    REQUIRE(d.exit_code == 0);
    CHECK(slurp(ws.path("d/observation.csv")) == ya);
}

TEST_CASE("cli: a config file behaves like the builtin it serializes") {
    Workspace ws("cfgfile");
    json j = pmx::cli::serialize_config(pmx::cli::builtin_config("thm3-l2"));
    ws.write("worked.json", j.dump(2));
    auto res = ws.run("estimate --config " + ws.path("worked.json").string() +
                      " --grid-steps 256 --out " + ws.dir("out"));
    CHECK(res.exit_code == 0);
    json rep = read_report(ws, "out");
    CHECK(rep["sigma"].get<double>() == doctest::Approx(kPi).epsilon(1e-6));
}

TEST_CASE("cli: --format selects which files are written") {
    Workspace ws("format");
    std::string base = "estimate --config thm3-l2 --grid-steps 256 ";
    auto all = ws.run(base + "--out " + ws.dir("all"));
    CHECK(all.exit_code == 0);
    CHECK(fs::exists(ws.path("all/report.json")));
    CHECK(fs::exists(ws.path("all/trajectory.csv")));

    auto only_json = ws.run(base + "--format json --out " + ws.dir("json"));
    CHECK(only_json.exit_code == 0);
    CHECK(fs::exists(ws.path("json/report.json")));
    CHECK(!fs::exists(ws.path("json/trajectory.csv")));

    auto only_csv = ws.run(base + "--format csv --out " + ws.dir("csv"));
    CHECK(only_csv.exit_code == 0);
    CHECK(!fs::exists(ws.path("csv/report.json")));
    CHECK(fs::exists(ws.path("csv/trajectory.csv")));
}

TEST_CASE("cli: invalid invocations exit with code 1") {
    Workspace ws("errors");

    auto unknown = ws.run("estimate --config does-not-exist --out " + ws.dir("x"));
    CHECK(unknown.exit_code == 1);
    CHECK(mentions(unknown.err, "neither a readable file nor a builtin"));

    ws.write("broken.json", "{ this is not json");
    auto broken = ws.run("estimate --config " + ws.path("broken.json").string() +
                         " --out " + ws.dir("x"));
    CHECK(broken.exit_code == 1);
    CHECK(mentions(broken.err, "broken.json"));

    json j = pmx::cli::serialize_config(pmx::cli::builtin_config("thm3-l2"));
    j["surprise"] = true;
    ws.write("extra.json", j.dump(2));
    auto extra = ws.run("check --config " + ws.path("extra.json").string() + " --out " +
                        ws.dir("x"));
    CHECK(extra.exit_code == 1);
    CHECK(mentions(extra.err, "surprise"));

    json h = pmx::cli::serialize_config(pmx::cli::builtin_config("thm3-l2"));
    h["system"]["H"][0][1] = "bogus";
    ws.write("badexpr.json", h.dump(2));
    auto badexpr = ws.run("check --config " + ws.path("badexpr.json").string() +
                          " --out " + ws.dir("x"));
    CHECK(badexpr.exit_code == 1);
    CHECK(mentions(badexpr.err, "system.H[0][1]"));
    CHECK(mentions(badexpr.err, "unknown identifier"));

    auto badformat = ws.run("estimate --config thm3-l2 --format yaml --out " + ws.dir("x"));
    CHECK(badformat.exit_code == 1);

    auto nosub = ws.run("");
    CHECK(nosub.exit_code == 1);
}
