#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "twinsig/delay.hpp"
#include "twinsig/movement.hpp"
#include "twinsig/network.hpp"
#include "twinsig/signal.hpp"

namespace twinsig {

enum class Algorithm : std::uint8_t { Baseline, DT1, DT2 };

/// Registration order; also the tie-break order for controller selection.
inline constexpr std::array<Algorithm, 3> kAllAlgorithms{Algorithm::Baseline, Algorithm::DT1, Algorithm::DT2};

std::string_view to_string(Algorithm a);
/// Accepts "baseline", "dt1", "dt2". Throws InvalidArgument listing the valid
/// tokens otherwise.
Algorithm parse_algorithm(std::string_view token);

/// Per-movement scalar (veh/lane/mile for the baseline, seconds for DT1/DT2).
struct DecisionInput {
  PerMovement<double> values{};
  NodeId intersection;
  double time{};

  double operator[](Movement m) const { return values[index_of(m)]; }
};

/// Throws InvalidArgument unless every value is finite and non-negative.
void validate(const DecisionInput& input);

struct Decision {
  std::optional<Phase> proposed_phase;  // nullopt: out of order
  Movement winning_movement{Movement::NBT};
  double winning_value{};

  bool out_of_order() const { return !proposed_phase.has_value(); }
};

inline constexpr double kMetersPerMile = 1609.344;

/// Vehicles per lane per mile. Throws InvalidArgument on nonpositive geometry.
double approach_density(int vehicle_count, int lane_count, double lane_length_miles);

/// Max-then-chain rule shared by all three algorithms: the maximum value is
/// tested against {NBT,SBT} -> 0, {WBT,EBT} -> 2, {WBL,EBL} -> 4,
/// {NBL,SBL} -> 6 in that order; the first group holding the max wins.
Decision chain_decide(const DecisionInput& input);

Decision baseline_decide(const DecisionInput& densities);
Decision dt1_decide(const DecisionInput& average_delays);
Decision dt2_decide(const DecisionInput& average_delays);
Decision decide_with(Algorithm algorithm, const DecisionInput& input);

/// Vehicles currently on one approach of the subject intersection.
struct ApproachObservation {
  Approach approach;
  int lane_count{1};
  double lane_length{};  // meters; the pocket length for left movements
  std::vector<DelayLedger> ledgers;
};

struct IntersectionObservation {
  NodeId intersection;
  double time{};
  PerMovement<ApproachObservation> approaches{};
};

/// Builds the algorithm's DecisionInput: Eq.-style densities for the
/// baseline, mean per-vehicle stopped delay for DT1/DT2.
DecisionInput build_input(Algorithm algorithm, const IntersectionObservation& obs);

}  // namespace twinsig
