#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qspde::cli {

using Json = nlohmann::ordered_json;

enum ExitCode : int {
    exit_pass = 0,
    exit_assertion_failure = 1,
    exit_config_error = 2,
    exit_numerical_abort = 3,
};

struct ExperimentSpec {
    std::string command;
    std::filesystem::path config_path;  ///< a config file or a previous run manifest
    std::filesystem::path out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

const std::vector<std::string>& commands();

/// Parses a config (or a manifest written by a previous run of the same
/// command) and fills in defaults. Throws ConfigError with line and field
/// information on malformed JSON, unknown keys or mistyped values.
Json load_config(const std::string& command, const std::string& text, const std::string& source = "config");

/// Default config of a command, which is also its schema.
Json default_config(const std::string& command);

/// Worker count after the deterministic-mode override (QSPDE_DETERMINISTIC
/// set to anything but "" or "0" forces one worker).
std::size_t effective_workers(std::optional<std::size_t> requested);

/// Runs one experiment, writing artifacts, manifest.json and summary.txt to
/// spec.out_dir. Returns one of the exit codes above.
int run(const ExperimentSpec& spec, std::ostream& out, std::ostream& err);

}  // namespace qspde::cli
