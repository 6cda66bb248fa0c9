#pragma once

#include <string>

#include "json.hpp"

#include "odeql/pipeline.hpp"

namespace odeql {

/// Exit codes of the command-line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitBoundViolation = 1,
  kExitUsage = 2,       // bad flags, unreadable input, unmet hypotheses
  kExitNumerical = 3,   // an estimate failed to converge or lost accuracy
};

/// Dispatches gen, encode, solve, verify, run and sweep.
int run_cli(int argc, char** argv);

nlohmann::json report_json(const PipelineReport& rep);
nlohmann::json sweep_json(const SweepResult& result);

/// Whether a run violated a guarantee it claims under its own hypotheses.
bool run_violates_bounds(const PipelineReport& rep);

}  // namespace odeql
