#pragma once

#include <filesystem>

#include "twinsig/config.hpp"
#include "twinsig/metrics.hpp"
#include "twinsig/twin.hpp"

namespace twinsig {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitRuntimeError = 3;

/// One run of `algorithm` writing its artifacts into `out_dir`.
SimulationSummary cmd_simulate(const RunConfig& config, Algorithm algorithm, const std::filesystem::path& out_dir);

/// One run per configured algorithm (shared seed) under out_dir/<algorithm>,
/// plus comparison files in out_dir. Needs baseline and one other algorithm.
ComparisonReport cmd_compare(const RunConfig& config, const std::filesystem::path& out_dir);

/// Twin loop around a live run; writes manifest.json and the live artifacts.
TwinRunLog cmd_twin(const RunConfig& config, const std::filesystem::path& out_dir);

/// Rebuilds the comparison files from the run directories under `dir`.
ComparisonReport cmd_report(const std::filesystem::path& dir, double bin_width);

/// Entry point for the twinsig executable; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace twinsig
