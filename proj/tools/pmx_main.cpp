#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "pmx/expr.hpp"
#include "pmx/scenario.hpp"

namespace fs = std::filesystem;

namespace {

struct Options {
    std::string config;
    std::string out = ".";
    std::string format = "all";
    long long grid_steps = -1;
    double rank_tol = -1.0;
    double feas_tol = -1.0;
    long long seed = -1;
};

pmx::cli::Config load_config(const std::string& source) {
    std::error_code ec;
    if (fs::is_regular_file(source, ec)) {
        std::ifstream in(source);
        if (!in) throw pmx::cli::ConfigError("cannot open config '" + source + "'");
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw pmx::cli::ConfigError("config '" + source + "': " + e.what());
        }
        return pmx::cli::parse_config(j);
    }
    for (const auto& name : pmx::cli::builtin_names())
        if (name == source) return pmx::cli::builtin_config(source);
    throw pmx::cli::ConfigError("config '" + source +
                                "' is neither a readable file nor a builtin scenario name");
}

void apply_overrides(pmx::cli::Config& cfg, const Options& opt) {
    if (opt.grid_steps >= 0) {
        if (opt.grid_steps < 2 || opt.grid_steps % 2 != 0 || opt.grid_steps > (1 << 22))
            throw pmx::cli::ConfigError("--grid-steps must be an even integer in [2, 2^22]");
        cfg.grid_steps = static_cast<int>(opt.grid_steps);
    }
    if (opt.rank_tol > 0.0) cfg.rank_tol = opt.rank_tol;
    if (opt.feas_tol > 0.0) cfg.feas_tol = opt.feas_tol;
    if (opt.seed >= 0 && cfg.observation) {
        auto seed = static_cast<std::uint64_t>(opt.seed);
        if (cfg.observation->noise) cfg.observation->noise->seed = seed;
        if (cfg.observation->simulate) cfg.observation->simulate->noise.seed = seed;
    }
}

void write_file(const fs::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw pmx::cli::ConfigError("cannot write '" + path.string() + "'");
    out << contents;
}

void write_outputs(const pmx::cli::CommandResult& res, const Options& opt) {
    fs::create_directories(opt.out);
    fs::path dir(opt.out);
    if (opt.format != "csv") write_file(dir / "report.json", res.report.dump(2) + "\n");
    if (opt.format != "json") {
        if (res.trajectory_csv) write_file(dir / "trajectory.csv", *res.trajectory_csv);
        if (res.observation_csv) write_file(dir / "observation.csv", *res.observation_csv);
    }
}

void print_result(const pmx::cli::CommandResult& res, bool table_only) {
    if (res.report.contains("warnings"))
        for (const auto& w : res.report["warnings"])
            std::cerr << "warning: " << w.get<std::string>() << "\n";
    if (table_only) {
        std::cout << res.human;
        return;
    }
    if (!res.human.empty()) std::cout << res.human << "\n";
    std::cout << res.report.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"guaranteed state observation for linear systems with periodic "
                 "boundary conditions"};
    app.require_subcommand(1);

    Options opt;
    std::string examples_name;

    auto add_output_flags = [&](CLI::App* sub) {
        sub->add_option("--out", opt.out, "output directory for report/CSV files")
            ->capture_default_str();
        sub->add_option("--format", opt.format, "which outputs to write")
            ->check(CLI::IsMember({"all", "json", "csv"}))
            ->capture_default_str();
    };
    auto add_config_flags = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config,
                        "path to a config JSON, or a builtin scenario name")
            ->required();
        sub->add_option("--grid-steps", opt.grid_steps, "override grid.steps (even)");
        sub->add_option("--rank-tol", opt.rank_tol, "override tolerances.rank_tol");
        sub->add_option("--feas-tol", opt.feas_tol, "override tolerances.feas_tol");
        sub->add_option("--seed", opt.seed, "override the observation noise seed");
        add_output_flags(sub);
    };

    CLI::App* c_check =
        app.add_subcommand("check", "decide whether a functional has a finite guaranteed "
                                    "estimation error");
    add_config_flags(c_check);
    CLI::App* c_estimate =
        app.add_subcommand("estimate", "compute the estimator kernel and the guaranteed "
                                       "error bound");
    add_config_flags(c_estimate);
    CLI::App* c_reconstruct =
        app.add_subcommand("reconstruct", "reconstruct the observable state component "
                                          "from an observation");
    add_config_flags(c_reconstruct);
    CLI::App* c_simulate =
        app.add_subcommand("simulate", "generate a synthetic observation for a given "
                                       "input and noise model");
    add_config_flags(c_simulate);
    CLI::App* c_examples =
        app.add_subcommand("examples", "run a builtin scenario against its expected "
                                       "values");
    c_examples->add_option("name", examples_name, "one of: thm3-l1, thm3-l2, example1")
        ->required();
    add_output_flags(c_examples);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        pmx::cli::CommandResult res;
        bool table = false;
        if (c_examples->parsed()) {
            res = pmx::cli::run_examples(examples_name);
            table = true;
        } else {
            pmx::cli::Config cfg = load_config(opt.config);
            apply_overrides(cfg, opt);
            if (c_check->parsed())
                res = pmx::cli::run_check(cfg);
            else if (c_estimate->parsed())
                res = pmx::cli::run_estimate(cfg);
            else if (c_reconstruct->parsed())
                res = pmx::cli::run_reconstruct(cfg);
            else
                res = pmx::cli::run_simulate(cfg);
        }
        write_outputs(res, opt);
        print_result(res, table);
        return res.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
