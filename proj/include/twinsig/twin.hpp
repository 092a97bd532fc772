#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "twinsig/metrics.hpp"
#include "twinsig/simulation.hpp"

namespace twinsig {

/// Where each of the nine twin dimensions lives in this code base.
struct TwinDimensions {
  std::map<std::string, std::string> entries;

  static const std::vector<std::string>& symbols();
  static TwinDimensions defaults();
  bool complete() const;
  nlohmann::json to_json() const;
};

/// Per-flow vph measured over a trailing window.
struct DemandEstimate {
  double window_length{};
  std::vector<double> vph;
};

/// Departures per flow in [t - window, t), scaled to vph. The window is
/// clipped at 0, so early estimates use whatever history exists.
DemandEstimate estimate_demand(std::span<const ScheduledDeparture> departures, std::size_t flow_count, double t,
                               double window);

/// One candidate per factor: the measured vph scaled elementwise.
std::vector<std::vector<double>> forecast_demands(const DemandEstimate& estimate, std::span<const double> factors);

struct SimulationJob {
  std::uint32_t id{};
  DemandScenario demand;
  Algorithm algorithm{Algorithm::Baseline};
  std::uint64_t seed{};
  SimClock clock{0.0, 1.0, 900.0, 300.0, 0.0};
  DepartureMode mode{DepartureMode::Poisson};
  VehicleParams vehicle;
  SignalTiming timing;
  int period{};
  int candidate{};
};

struct SimulationResult {
  std::uint32_t job_id{};
  bool ok{};
  std::string error;
  SimulationSummary summary;
};

SimulationResult run_job(const Network& net, const SimulationJob& job);

/// Runs jobs on up to `parallelism` threads (0 picks the hardware count).
/// Results are sorted by job id and independent of scheduling. A throwing job
/// fills its own slot with ok = false.
std::vector<SimulationResult> run_parallel(const Network& net, std::span<const SimulationJob> jobs,
                                           unsigned parallelism = 1);

nlohmann::json results_json(std::span<const SimulationResult> results);

/// Index of the nearest candidate by Euclidean distance; ties pick the
/// smallest index. Throws InvalidArgument on empty input or mismatched sizes.
std::size_t match_demand(std::span<const double> measured, const std::vector<std::vector<double>>& candidates);

struct ScoredResult {
  std::uint32_t job_id{};
  Algorithm algorithm{Algorithm::Baseline};
  double mean_control_delay{};
  LosGrade los{LosGrade::A};
};

struct TwinSelection {
  std::vector<ScoredResult> scored;
  Algorithm chosen{Algorithm::Baseline};
  std::size_t matched_demand{};
};

/// Lowest mean control delay wins; ties fall to baseline, then dt1, then dt2.
/// Throws InvalidArgument on an empty list.
TwinSelection select_controller(std::span<const ScoredResult> scored, std::size_t matched_demand = 0);

struct TwinConfig {
  double period{300.0};
  std::vector<double> factors{0.8, 1.0, 1.2};
  double forecast_window{300.0};
  double match_window{120.0};
  double job_horizon{900.0};
  double job_warmup{300.0};
  double job_cooldown{0.0};
  unsigned parallelism{1};
  Algorithm initial{Algorithm::Baseline};
};

void validate(const TwinConfig& config);

/// Departure stream for the live run: flow templates (OD and speed) plus the
/// concrete schedule, whose flow_index refers to `flows`.
struct LiveDemand {
  std::vector<Flow> flows;
  std::vector<ScheduledDeparture> departures;
};

/// Live demand following `before` until `t_change` and `after` from then on.
/// Both scenarios must list the same OD pairs in the same order.
LiveDemand step_change_demand(const Network& net, const DemandScenario& before, const DemandScenario& after,
                              double t_change, double horizon, std::uint64_t root_seed, DepartureMode mode);
LiveDemand constant_demand(const Network& net, const DemandScenario& scenario, double horizon, std::uint64_t root_seed,
                           DepartureMode mode);

struct TwinPeriod {
  int index{};
  double t{};
  Algorithm active{Algorithm::Baseline};
  DemandEstimate forecast_estimate;
  DemandEstimate match_estimate;
  std::vector<std::vector<double>> candidates;
  std::vector<std::uint32_t> job_ids;
  bool degraded{};
  std::vector<std::string> errors;
  std::optional<TwinSelection> selection;
};

struct TwinRunLog {
  TwinDimensions dimensions;
  std::uint64_t root_seed{};
  TwinConfig config;
  std::vector<SimulationJob> jobs;
  std::vector<SimulationResult> results;
  std::vector<TwinPeriod> periods;
  std::vector<SwapEvent> swaps;
  SimulationSummary live_summary;
  std::vector<TraversalRecord> live_traversals;
  std::vector<SignalLogRow> live_signal_log;
};

/// Runs the live simulation and, at every period boundary, estimates demand,
/// forecasts candidates, simulates each (candidate, algorithm) pair from an
/// empty network, matches the recent demand to a candidate and requests the
/// best controller for it. The swap lands at the next green decision point.
TwinRunLog live_loop(const Network& net, const LiveDemand& demand, const SimulationOptions& live_options,
                     const TwinConfig& config, std::uint64_t root_seed);

nlohmann::json manifest_json(const Network& net, const TwinRunLog& log);

}  // namespace twinsig
