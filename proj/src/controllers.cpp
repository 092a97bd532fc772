#include "twinsig/controllers.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "twinsig/error.hpp"

namespace twinsig {

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Baseline: return "baseline";
    case Algorithm::DT1: return "dt1";
    case Algorithm::DT2: return "dt2";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view token) {
  for (auto a : kAllAlgorithms) {
    if (to_string(a) == token) return a;
  }
  throw InvalidArgument(fmt::format("unknown algorithm '{}' (valid: baseline, dt1, dt2)", token));
}

void validate(const DecisionInput& input) {
  for (auto m : kAllMovements) {
    const double v = input[m];
    if (!std::isfinite(v) || v < 0.0) {
      throw InvalidArgument(fmt::format("decision input for {} must be finite and >= 0, got {}", to_string(m), v));
    }
  }
}

double approach_density(int vehicle_count, int lane_count, double lane_length_miles) {
  if (lane_count < 1 || !(lane_length_miles > 0.0)) throw InvalidArgument("approach_density requires positive lane geometry");
  if (vehicle_count < 0) throw InvalidArgument("vehicle count must be non-negative");
  return static_cast<double>(vehicle_count) / (static_cast<double>(lane_count) * lane_length_miles);
}

Decision chain_decide(const DecisionInput& input) {
  double max_value = input.values[0];
  for (double v : input.values) max_value = std::max(max_value, v);

  struct Group {
    Movement first;
    Movement second;
    int phase;
  };
  static constexpr std::array<Group, 4> kChain{{{Movement::NBT, Movement::SBT, 0},
                                                {Movement::WBT, Movement::EBT, 2},
                                                {Movement::WBL, Movement::EBL, 4},
                                                {Movement::NBL, Movement::SBL, 6}}};
  for (const auto& g : kChain) {
    if (max_value == input[g.first] || max_value == input[g.second]) {
      const Movement winner = max_value == input[g.first] ? g.first : g.second;
      return {Phase{g.phase}, winner, max_value};
    }
  }
  return {std::nullopt, Movement::NBT, max_value};
}

Decision baseline_decide(const DecisionInput& densities) { return chain_decide(densities); }
Decision dt1_decide(const DecisionInput& average_delays) { return chain_decide(average_delays); }
Decision dt2_decide(const DecisionInput& average_delays) { return chain_decide(average_delays); }

Decision decide_with(Algorithm algorithm, const DecisionInput& input) {
  switch (algorithm) {
    case Algorithm::Baseline: return baseline_decide(input);
    case Algorithm::DT1: return dt1_decide(input);
    case Algorithm::DT2: return dt2_decide(input);
  }
  return chain_decide(input);
}

DecisionInput build_input(Algorithm algorithm, const IntersectionObservation& obs) {
  DecisionInput in;
  in.intersection = obs.intersection;
  in.time = obs.time;
  for (auto m : kAllMovements) {
    const auto& a = obs.approaches[index_of(m)];
    double v = 0.0;
    if (algorithm == Algorithm::Baseline) {
      if (a.lane_length > 0.0) {
        v = approach_density(static_cast<int>(a.ledgers.size()), a.lane_count, a.lane_length / kMetersPerMile);
      }
    } else {
      const auto variant = algorithm == Algorithm::DT1 ? DelayVariant::DT1 : DelayVariant::DT2;
      v = average_approach_delay(a.approach, a.ledgers, variant).average;
    }
    in.values[index_of(m)] = v;
  }
  return in;
}

}  // namespace twinsig
