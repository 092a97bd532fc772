#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "twinsig/demand.hpp"
#include "twinsig/network.hpp"
#include "twinsig/simulation.hpp"
#include "twinsig/twin.hpp"

namespace twinsig {

enum class ScenarioKind : std::uint8_t { Ladder, Asymmetric, File };

struct ScenarioSpec {
  ScenarioKind kind{ScenarioKind::Ladder};
  int id{1};                  // ladder index 1..11
  double base_vph{100.0};     // ladder scenario 1 per OD pair
  double ladder_factor{0.5};  // each step adds factor * base
  AsymmetricDemand asymmetric;
  std::string file;
  double scale{1.0};  // multiplies every flow after construction
};

struct StepChange {
  double t{1800.0};
  ScenarioSpec scenario;
};

struct TwinSettings {
  TwinConfig twin;
  std::optional<StepChange> step_change;
};

/// Everything a run needs. A copy is written to every output directory and
/// reloading it reproduces the run.
struct RunConfig {
  std::optional<GridSpec> grid{GridSpec{}};
  std::string network_file;  // used when grid is empty
  ScenarioSpec scenario;
  std::vector<Algorithm> algorithms{Algorithm::Baseline};
  std::uint64_t seed{42};
  SimClock clock;
  DepartureMode departure_mode{DepartureMode::Poisson};
  VehicleParams vehicle;
  SignalTiming signal;
  double fixed_split{30.0};
  bool left_turn_carry_over{true};
  double dsd_bin_width{10.0};
  bool write_trajectory{true};
  unsigned parallelism{1};
  std::string output_dir{"out"};
  TwinSettings twin;
};

/// Throws ConfigError on malformed input or invalid values. Relative file
/// paths are resolved against `base_dir`.
RunConfig config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
nlohmann::json config_to_json(const RunConfig& config);
RunConfig load_config(const std::filesystem::path& path);

/// Throws ConfigError when values are out of range.
void validate(const RunConfig& config);

Network build_network(const RunConfig& config);
DemandScenario build_scenario(const Network& net, const ScenarioSpec& spec);

}  // namespace twinsig
