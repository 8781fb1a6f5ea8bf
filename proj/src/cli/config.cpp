#include "internal.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

namespace qspde::cli {
namespace {

constexpr int manifest_format = 1;

Json simulation_defaults() {
    return Json{
        {"n", 256},
        {"dt", 1e-4},
        {"t_end", 1.0},
        {"scheme", "f_imex"},
        {"v_flux_mode", "imex"},
        {"eps", 1e-3},
        {"seed", 0},
        {"m", 0.0},
        {"coefficient", {{"kind", "linear"}, {"slope", 1.0}, {"amplitude", 0.5}, {"offset", 0.0}}},
        {"noise", {{"source", "bridge"}, {"kl_modes", 0}, {"sigma", 0.0}}},
        {"initial",
         {{"profile", "sine"}, {"field", "v"}, {"amplitude", 1.0}, {"mode", 1}, {"kl_modes", 0}, {"path", ""}}},
        {"diagnostics_every", 1},
        {"snapshot_every", 0},
        {"blowup_ceiling", 1e6},
        {"snapshot_format", "csv"},
    };
}

Json noise_defaults() {
    return Json{
        {"n", 256},
        {"seed", 0},
        {"eps", 1e-3},
        {"noise", {{"source", "bridge"}, {"kl_modes", 0}, {"sigma", 0.0}}},
    };
}

std::size_t line_of(const std::string& text, std::size_t offset) {
    offset = std::min(offset, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

std::string where(const std::string& text, const std::string& source, const std::string& key) {
    const std::size_t pos = text.find("\"" + key + "\"");
    if (pos == std::string::npos) return source;
    return source + ":" + std::to_string(line_of(text, pos));
}

bool same_kind(const Json& def, const Json& value) {
    if (def.is_number_integer()) {
        return value.is_number_unsigned() || (value.is_number_integer() && value.get<std::int64_t>() >= 0);
    }
    if (def.is_number()) return value.is_number();
    if (def.is_array()) {
        if (!value.is_array() || value.empty()) return false;
        return std::all_of(value.begin(), value.end(), [&](const Json& v) { return same_kind(def.front(), v); });
    }
    return def.type() == value.type();
}

std::string kind_name(const Json& def) {
    if (def.is_number_integer()) return "a nonnegative integer";
    if (def.is_number()) return "a number";
    if (def.is_string()) return "a string";
    if (def.is_boolean()) return "a boolean";
    if (def.is_array()) return "a nonempty array of " + kind_name(def.front()).substr(2);
    return "an object";
}

// Overlays user values on the defaults, rejecting unknown keys and wrong types.
void merge(Json& target, const Json& user, const std::string& path, const std::string& text,
           const std::string& source) {
    if (!user.is_object()) throw ConfigError(source + ": " + path + " must be a JSON object");
    for (const auto& [key, value] : user.items()) {
        const std::string field = path + "." + key;
        if (!target.contains(key)) {
            throw ConfigError(where(text, source, key) + ": unknown key '" + field + "'");
        }
        Json& slot = target[key];
        if (slot.is_object()) {
            merge(slot, value, field, text, source);
        } else if (!same_kind(slot, value)) {
            throw ConfigError(where(text, source, key) + ": '" + field + "' must be " + kind_name(slot));
        } else {
            slot = slot.is_number_float() && value.is_number() ? Json(value.get<double>()) : value;
        }
    }
}

}  // namespace

const std::vector<std::string>& commands() {
    static const std::vector<std::string> list{"noise",  "stationary", "energy",      "simulate",
                                               "decay",  "drift",      "convergence", "initial-layer"};
    return list;
}

Json default_config(const std::string& command) {
    if (command == "noise") return noise_defaults();
    if (command == "stationary") {
        Json c = noise_defaults();
        c["coefficient"] = simulation_defaults()["coefficient"];
        c["m"] = 0.0;
        return c;
    }
    if (command == "energy") {
        Json c = default_config("stationary");
        c.erase("m");
        c["samples"] = 1000;
        return c;
    }
    if (command == "simulate") return simulation_defaults();
    if (command == "decay") {
        Json c = simulation_defaults();
        c["t_end"] = 10.0;
        c["dt"] = 1e-3;
        c["eps"] = 0.0;
        c["initial"]["profile"] = "bridge";
        c["initial"]["field"] = "f";
        c["initial"]["amplitude"] = 0.5;
        c["seeds"] = Json::array({0});
        c["t_layer"] = 1e-2;
        c["slope_factor"] = 0.95;
        return c;
    }
    if (command == "drift") {
        Json c = simulation_defaults();
        c["t_end"] = 20.0;
        c["dt"] = 1e-3;
        c["m"] = 1.0;
        c["snapshot_every"] = 10;
        c["diagnostics_every"] = 10;
        c["noise"]["sigma"] = 0.05;
        c["window"] = Json::array({5.0, 20.0});
        c["tolerance"] = 0.1;
        return c;
    }
    if (command == "convergence") {
        Json c = simulation_defaults();
        c.erase("eps");
        c["n"] = 512;
        c["dt"] = 1e-4;
        c["t_end"] = 0.1;
        c["m"] = 1.0;
        c["noise"]["kl_modes"] = 8;
        c["eps_values"] = Json::array({1e-2, 1e-3, 1e-4});
        c["min_gap_ratio"] = 1.0;
        return c;
    }
    if (command == "initial-layer") {
        return Json{
            {"grids", Json::array({256, 512, 1024})},
            {"delta", 1e-3},
            {"layer_steps", 4},
            {"dt", 1e-5},
            {"eps", 1e-3},
            {"seed", 0},
            {"noise", {{"kl_modes", 64}}},
            {"amplitude", 1.0},
            {"coefficient", simulation_defaults()["coefficient"]},
        };
    }
    throw ConfigError("unknown command '" + command + "'");
}

Json load_config(const std::string& command, const std::string& text, const std::string& source) {
    Json parsed;
    try {
        parsed = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ConfigError(source + ":" + std::to_string(line_of(text, e.byte == 0 ? 0 : e.byte - 1)) +
                          ": malformed JSON (" + e.what() + ")");
    }
    if (!parsed.is_object()) throw ConfigError(source + ": top level must be a JSON object");

    if (parsed.contains("manifest_format")) {
        if (parsed.value("command", "") != command) {
            throw ConfigError(source + ": manifest was written by '" + parsed.value("command", "?") +
                              "', not '" + command + "'");
        }
        if (!parsed.contains("config")) throw ConfigError(source + ": manifest has no config");
        parsed = parsed["config"];
    }
    Json config = default_config(command);
    merge(config, parsed, "config", text, source);
    return config;
}

int detail::manifest_format_version() { return manifest_format; }

std::size_t effective_workers(std::optional<std::size_t> requested) {
    if (const char* env = std::getenv("QSPDE_DETERMINISTIC"); env != nullptr) {
        const std::string v(env);
        if (!v.empty() && v != "0") return 1;
    }
    if (requested) return std::max<std::size_t>(1, *requested);
    return std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 8);
}

}  // namespace qspde::cli
