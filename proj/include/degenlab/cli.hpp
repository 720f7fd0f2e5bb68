#pragma once

// Batch front end: degenlab <command> --config <path> [--out <dir>] [--threads N] [--seed S]

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "degenlab/solver.hpp"

namespace degenlab {

enum ExitCode : int { kExitOk = 0, kExitInternal = 1, kExitValidation = 2, kExitNonConvergence = 3, kExitIo = 4 };

/// argv[0] is the program name, as in main.
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args);

/// Writes to `path.tmp` then renames over `path`; throws IoError.
void write_atomic(const std::string& path, const std::string& content);
/// %.17g, the CSV number format.
std::string format_number(double value);

nlohmann::json to_json(const SolveReport& report);

}  // namespace degenlab
