#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "twinsig/network.hpp"

namespace twinsig {

enum class DepartureMode : std::uint8_t { Poisson, Uniform };

std::string_view to_string(DepartureMode mode);
DepartureMode parse_departure_mode(std::string_view token);

/// Origin/destination pair between peripheral segments. `via` pins the
/// route through intermediate segments; empty means plain shortest path.
struct OdPair {
  SegmentId origin;
  SegmentId destination;
  std::vector<SegmentId> via;
};

struct Flow {
  OdPair od;
  double vph{};
  double depart_speed{};
};

enum class DemandClass : std::uint8_t { Low, Moderate, High };

std::string_view to_string(DemandClass c);

/// Fixed mapping: 1-3 low, 4-7 moderate, 8-11 high.
DemandClass demand_class_for(int scenario_id);

struct DemandScenario {
  int scenario_id{1};
  std::vector<Flow> flows;
  DemandClass demand_class{DemandClass::Low};
};

struct Departure {
  double depart_time{};
  Route route;
};

/// Departure instants in [0, horizon). Uniform mode emits
/// floor(vph * horizon / 3600) evenly spaced departures starting at 0;
/// Poisson mode draws exponential headways from mt19937_64(seed).
std::vector<double> departure_times(double vph, double horizon, std::uint64_t seed, DepartureMode mode);

std::vector<Departure> generate_departures(const Network& net, const Flow& flow, double horizon,
                                           std::uint64_t seed, DepartureMode mode);

Route route_for(const Network& net, const OdPair& od);

/// Eleven scenarios of monotonically increasing demand: scenario k gives
/// every OD pair base_vph + (k - 1) * ladder_factor * base_vph.
std::vector<DemandScenario> scenario_catalog(std::span<const OdPair> od_pairs, double base_vph, double ladder_factor);

/// OD pairs for a grid from build_grid: straight corridors through every
/// row and column in both directions, plus one left-turning pair per
/// approach of the subject intersection (pinned through the subject).
std::vector<OdPair> default_od_pairs(const Network& grid);

struct AsymmetricDemand {
  double major_through_vph{650.0};  // EB/WB through the subject
  double minor_through_vph{150.0};  // NB/SB through the subject
  double left_vph{60.0};            // each left movement at the subject
  double background_vph{100.0};     // other corridors
};

/// Scenario with heavy east-west demand at the subject intersection.
DemandScenario asymmetric_scenario(const Network& grid, const AsymmetricDemand& demand, int scenario_id = 3);

nlohmann::json scenario_to_json(const Network& net, const DemandScenario& scenario);
DemandScenario scenario_from_json(const Network& net, const nlohmann::json& doc);

}  // namespace twinsig
