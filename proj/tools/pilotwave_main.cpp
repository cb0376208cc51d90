#include <CLI11.hpp>

#include "pilotwave/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Bohmian trajectory and weak-measurement simulator for "
                 "path-entangled photon pairs in a double double-slit"};
    app.set_version_flag("--version", std::string(pilotwave::cli::kToolName) + " " +
                                          pilotwave::cli::kToolVersion);

    pilotwave::cli::CliOptions opt;
    std::uint64_t seed = 0;
    app.add_option("--config", opt.config_path, "flat key = value config file");
    app.add_option("--set", opt.overrides, "override one key, key=value (repeatable)");
    app.add_option("--out", opt.out_prefix, "output path prefix")
        ->capture_default_str();
    auto* seed_opt = app.add_option("--seed", seed, "master seed (default fixed, never wall clock)");
    app.add_option("--scenario", opt.scenario,
                   "budget | trajectories | joint-density | marginals | "
                   "velocity-profile | weak-sim | equivariance");

    CLI11_PARSE(app, argc, argv);
    if (seed_opt->count() > 0) opt.seed = seed;
    return pilotwave::cli::run(opt);
}
