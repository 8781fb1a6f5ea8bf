#pragma once

#include "qspde/cli.hpp"
#include "qspde/grid.hpp"
#include "qspde/solver.hpp"

#include <atomic>
#include <exception>
#include <filesystem>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace qspde::cli::detail {

int manifest_format_version();

struct Check {
    std::string name;
    std::string status;  ///< PASS, FAIL or SKIPPED
    std::string detail;
};

struct Report {
    std::vector<Check> checks;
    Json final = Json::object();
    std::vector<std::string> artifacts;  ///< relative to the run directory

    void check(const std::string& name, bool pass, const std::string& detail) {
        checks.push_back({name, pass ? "PASS" : "FAIL", detail});
    }
    void skip(const std::string& name, const std::string& reason) { checks.push_back({name, "SKIPPED", reason}); }
    bool failed() const {
        for (const Check& c : checks) {
            if (c.status == "FAIL") return true;
        }
        return false;
    }
};

struct Context {
    Json config;
    std::filesystem::path out;
    std::size_t workers = 1;
    Report report;
    std::mutex artifact_mutex;

    /// Registers an artifact path relative to out and returns its full path.
    /// Safe to call from worker threads; the list is sorted before writing.
    std::filesystem::path artifact(const std::string& relative) {
        std::lock_guard lock(artifact_mutex);
        report.artifacts.push_back(relative);
        const std::filesystem::path p = out / relative;
        std::filesystem::create_directories(p.parent_path());
        return p;
    }
};

void run_noise(Context& ctx);
void run_stationary(Context& ctx);
void run_energy(Context& ctx);
void run_simulate(Context& ctx);
void run_decay(Context& ctx);
void run_drift(Context& ctx);
void run_convergence(Context& ctx);
void run_initial_layer(Context& ctx);

/// Runs body(0..count-1) on at most `workers` threads. Exceptions are
/// rethrown after all workers finish, lowest index first.
inline void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& body) {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(count);
    const auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 1; w < std::min(workers, count); ++w) pool.emplace_back(worker);
        worker();
    }
    for (const std::exception_ptr& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace qspde::cli::detail
