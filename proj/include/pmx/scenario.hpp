#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pmx/observer.hpp"
#include "pmx/time_matrix.hpp"

namespace pmx::cli {

// A configuration field is missing, malformed, or inconsistent. The message
// names the offending field path.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Experiment description as read from JSON. Expression-valued fields keep
// their source text so that serialize/parse round-trips are exact.
struct Config {
    int n = 0, r = 0, m = 0;
    std::string omega;  // expression text; plain numbers are accepted
    std::vector<std::vector<std::string>> A, B, H;

    int grid_steps = 2048;

    std::optional<std::vector<std::string>> functional;  // l entries, size n

    struct Noise {
        std::string kind = "none";  // none | deterministic | random
        std::vector<std::string> shape;
        double scale = 1.0;
        std::uint64_t seed = 0;
    };

    struct Simulate {
        std::vector<std::string> f;  // size r
        std::optional<std::vector<std::string>> kernel_component;
        Noise noise;
        bool allow_nonperiodic = false;
    };

    struct Observation {
        std::vector<std::string> y;        // expression form (empty when unused)
        std::string path;                  // sampled CSV form (empty when unused)
        std::optional<Noise> noise;        // extra noise applied on ingest
        std::optional<Simulate> simulate;  // synthetic observation block
    };
    std::optional<Observation> observation;

    std::optional<std::vector<std::string>> truth_x;  // size n

    double rank_tol = 1e-10;
    double feas_tol = 1e-6;
    double bvp_tol = 1e-6;
};

Config parse_config(const nlohmann::json& j);
nlohmann::json serialize_config(const Config& cfg);

std::vector<std::string> builtin_names();
Config builtin_config(const std::string& name);

// Library objects built from a config.
observer::System build_system(const Config& cfg);
Grid build_grid(const Config& cfg);
observer::Tolerances build_tolerances(const Config& cfg);
ode::VecFn build_functional(const Config& cfg);  // requires cfg.functional

// Result of one CLI command. Files are returned as contents and written by
// the front end under the output directory.
struct CommandResult {
    int exit_code = 0;
    nlohmann::json report;
    std::string human;  // table or one-line summary for stdout
    std::optional<std::string> trajectory_csv;
    std::optional<std::string> observation_csv;
};

CommandResult run_check(const Config& cfg);
CommandResult run_estimate(const Config& cfg);
CommandResult run_reconstruct(const Config& cfg);
CommandResult run_simulate(const Config& cfg);
CommandResult run_examples(const std::string& name);

}  // namespace pmx::cli
