#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vaoi/model.hpp"
#include "vaoi/sim.hpp"
#include "vaoi/solver.hpp"

namespace vaoi::cli {

struct SweepSpec {
    std::string name;
    SweepAxis axis = SweepAxis::Beta;
    std::vector<double> values;
    std::vector<std::string> policies{"optimal", "greedy", "random"};
    nlohmann::json base_override = nlohmann::json::object();
};

struct SamplePathSpec {
    std::size_t horizon = 200;
    std::size_t replication = 0;
    std::vector<std::string> policies{"optimal", "greedy"};
};

/// One JSON document describing an experiment. Command-line flags override
/// individual fields before the fingerprint is taken.
struct ExperimentConfig {
    SystemParams params;
    RviOptions solver;
    SweepProtocol protocol;
    std::vector<SweepSpec> sweeps;
    SamplePathSpec samplepath;
    std::filesystem::path out = "out";
    std::size_t max_states = kDefaultMaxStates;

    nlohmann::json to_json() const;
    std::string fingerprint() const;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Exit codes shared by the subcommands.
enum Exit : int { kOk = 0, kUsage = 1, kNotConverged = 2, kCheckFailed = 3, kError = 4 };

int cmd_solve(const ExperimentConfig& cfg, bool export_kernel);
int cmd_check(const ExperimentConfig& cfg, const std::filesystem::path& policy_file,
              const std::filesystem::path& value_file);
int cmd_sweep(const ExperimentConfig& cfg);
int cmd_samplepath(const ExperimentConfig& cfg);
int cmd_oracle(const ExperimentConfig& cfg);

/// Full command-line entry point.
int run(int argc, char** argv);

}  // namespace vaoi::cli
