#include "dpm/runner.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Double-porosity flow toolkit: cell tensors, DNS, homogenized models"};
    app.require_subcommand(1, 1);

    dpm::RunOptions options;
    for (const auto& name : dpm::subcommands()) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", options.config_path, "configuration file")->required();
        sub->add_option("--out", options.out_dir, "run directory")->capture_default_str();
        sub->add_option("--jobs", options.jobs, "concurrent sub-runs (converge)")
            ->capture_default_str()
            ->check(CLI::PositiveNumber);
        sub->add_flag("--quiet", options.quiet, "suppress progress messages");
        sub->callback([&options, name] { options.subcommand = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : dpm::exit_code(dpm::ErrorCategory::invalid_input);
    }
    return dpm::run(options, std::cerr);
}
