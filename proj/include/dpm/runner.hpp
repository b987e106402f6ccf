#pragma once

#include "dpm/error.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace dpm {

struct RunOptions {
    std::string subcommand;
    std::string config_path;
    std::string out_dir = "out";
    int jobs = 1;
    bool quiet = false;
};

const std::vector<std::string>& subcommands();

/// 2 invalid input, 3 convergence failure, 4 infeasible geometry, 5 I/O.
int exit_code(ErrorCategory category);

/// Loads and validates the configuration, dispatches the subcommand and
/// writes summary.json, diagnostics.csv, config.resolved and optional VTK
/// files into `out_dir`. Nothing is written when the configuration is
/// rejected. Errors are reported on `err` as one JSON line
/// {"error": {"category": ..., "message": ...}}. Returns the exit status.
int run(const RunOptions& options, std::ostream& err);

}  // namespace dpm
