#pragma once

#include <cstdint>
#include <string>

namespace edvcm {

// Library form of the CLI commands so they stay testable without a process
// boundary.  Each throws input_error for bad inputs and numeric_error for
// runtime failures; run_cli maps those to exit codes 2 and 3.

struct MatchOptions {
  std::string exposures_path;
  std::string outcomes_path;
  std::string config_path;
  std::string out_path;  // dataset CSV; the report lands next to it
};

struct FitOptions {
  std::string data_path;
  std::string priors = "simulation";  // preset name or a priors JSON file
  int chains = 4;
  int warmup = 1000;
  int samples = 1000;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out_dir;
};

struct SimulateOptions {
  std::string protocol;  // protocol JSON file or a preset name
  long n_sim = -1;       // -1: take the protocol's value
  int jobs = -1;
  long long seed = -1;
  std::string out_dir;
};

// "data.csv" -> "data.report.csv"; a path without extension gains one.
std::string match_report_path(const std::string& out_path);

void run_match_command(const MatchOptions& options);
void run_fit_command(const FitOptions& options);
void run_simulate_command(const SimulateOptions& options);

// Full argv-level entry point: parses flags, dispatches, and converts
// errors to the exit-code contract (0 ok, 2 input error, 3 runtime failure).
int run_cli(int argc, const char* const* argv);

}  // namespace edvcm
