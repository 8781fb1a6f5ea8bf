#include "qspde/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"qspde: simulation and verification campaigns for the noisy quasilinear diffusion on the torus"};
    app.require_subcommand(1);

    qspde::cli::ExperimentSpec spec;
    std::uint64_t seed = 0;
    std::size_t workers = 0;
    for (const std::string& name : qspde::cli::commands()) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", spec.config_path, "JSON config file or a manifest from an earlier run")->required();
        sub->add_option("--out", spec.out_dir, "output directory")->required();
        sub->add_option("--seed", seed, "overrides the config seed");
        sub->add_option("--workers", workers, "worker threads for sweeps")->check(CLI::PositiveNumber);
        sub->callback([&spec, sub, name, &seed, &workers] {
            spec.command = name;
            if (sub->count("--seed") > 0) spec.seed = seed;
            if (sub->count("--workers") > 0) spec.workers = workers;
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : qspde::cli::exit_config_error;
    }
    return qspde::cli::run(spec, std::cout, std::cerr);
}
