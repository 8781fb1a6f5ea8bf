#include "internal.hpp"

#include "qspde/errors.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

#ifndef QSPDE_VERSION
#define QSPDE_VERSION "unknown"
#endif

namespace qspde::cli {
namespace {

using detail::Context;

void dispatch(const std::string& command, Context& ctx) {
    if (command == "noise") return detail::run_noise(ctx);
    if (command == "stationary") return detail::run_stationary(ctx);
    if (command == "energy") return detail::run_energy(ctx);
    if (command == "simulate") return detail::run_simulate(ctx);
    if (command == "decay") return detail::run_decay(ctx);
    if (command == "drift") return detail::run_drift(ctx);
    if (command == "convergence") return detail::run_convergence(ctx);
    if (command == "initial-layer") return detail::run_initial_layer(ctx);
    throw ConfigError("unknown command '" + command + "'");
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot read config file '" + path.string() + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace

int run(const ExperimentSpec& spec, std::ostream& out, std::ostream& err) {
    const auto start = std::chrono::steady_clock::now();
    Context ctx;
    try {
        if (std::find(commands().begin(), commands().end(), spec.command) == commands().end()) {
            throw ConfigError("unknown command '" + spec.command + "'");
        }
        ctx.config = load_config(spec.command, read_file(spec.config_path), spec.config_path.string());
        if (spec.seed) ctx.config["seed"] = *spec.seed;
        if (spec.out_dir.empty()) throw ConfigError("no output directory given");
        std::error_code ec;
        std::filesystem::create_directories(spec.out_dir, ec);
        if (ec || !std::filesystem::is_directory(spec.out_dir)) {
            throw ConfigError("output directory '" + spec.out_dir.string() + "' is not writable");
        }
        ctx.out = spec.out_dir;
        ctx.workers = effective_workers(spec.workers);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config_error;
    }

    int code = exit_pass;
    std::string status = "completed";
    Json failure;
    try {
        dispatch(spec.command, ctx);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config_error;
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config_error;
    } catch (const NumericalError& e) {
        code = exit_numerical_abort;
        status = dynamic_cast<const BlowUpError*>(&e) != nullptr ? "blow_up" : "numerical_abort";
        failure = Json{{"message", e.what()}};
        if (e.has_step()) failure["step"] = e.step();
        err << "numerical abort: " << e.what() << (e.has_step() ? " at step " + std::to_string(e.step()) : "")
            << '\n';
    }
    if (code == exit_pass && ctx.report.failed()) code = exit_assertion_failure;

    std::sort(ctx.report.artifacts.begin(), ctx.report.artifacts.end());
    Json checks = Json::array();
    for (const detail::Check& c : ctx.report.checks) {
        checks.push_back(Json{{"name", c.name}, {"status", c.status}, {"detail", c.detail}});
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    Json manifest{
        {"manifest_format", detail::manifest_format_version()},
        {"command", spec.command},
        {"version", QSPDE_VERSION},
        {"config", ctx.config},
        {"status", status},
        {"exit_code", code},
    };
    if (!failure.is_null()) manifest["failure"] = failure;
    manifest["final"] = ctx.report.final;
    manifest["checks"] = checks;
    manifest["artifacts"] = ctx.report.artifacts;
    manifest["wall_time_seconds"] = wall;

    std::ofstream(ctx.out / "manifest.json") << manifest.dump(2) << '\n';
    std::ostringstream summary;
    for (const detail::Check& c : ctx.report.checks) summary << c.status << "  " << c.name << ": " << c.detail << '\n';
    if (code == exit_numerical_abort) summary << "ABORTED  " << status << ": " << failure["message"].get<std::string>() << '\n';
    std::ofstream(ctx.out / "summary.txt") << summary.str();
    out << summary.str();
    return code;
}

}  // namespace qspde::cli
