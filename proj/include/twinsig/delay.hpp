#pragma once

#include <span>
#include <vector>

#include "twinsig/network.hpp"

namespace twinsig {

/// Speed below which a vehicle counts as stopped (strict comparison).
inline constexpr double kStoppedSpeed = 0.1;

/// Per-vehicle stopped-delay bookkeeping.
///
/// `waiting` is the current below-threshold spell and resets once the
/// vehicle moves; `accumulated` is the lifetime total and never resets.
/// `entry_accumulated` snapshots `accumulated` when the vehicle entered its
/// current approach, and `carried_over` is the stopped delay it picked up on
/// the approach before that.
struct DelayLedger {
  double waiting{};
  double accumulated{};
  double entry_accumulated{};
  double carried_over{};

  bool operator==(const DelayLedger&) const = default;
};

enum class DelayVariant : std::uint8_t { DT1, DT2 };

DelayLedger update_waiting(DelayLedger ledger, double speed, double dt);

/// Stopped delay on the current approach. Throws LedgerCorruption if the
/// entry snapshot exceeds the running total.
double vehicle_delay_dt1(const DelayLedger& ledger);

/// Current-approach delay plus the delay carried over from the previous one.
double vehicle_delay_dt2(const DelayLedger& ledger);

double vehicle_delay(const DelayLedger& ledger, DelayVariant variant);

/// Called as the vehicle crosses into its next approach.
DelayLedger on_approach_transition(DelayLedger ledger);

struct ApproachDelaySnapshot {
  Approach approach;
  std::vector<double> vehicle_delays;
  double average{};
};

ApproachDelaySnapshot average_approach_delay(const Approach& approach, std::span<const DelayLedger> vehicles,
                                             DelayVariant variant);

/// Travel time on a segment beyond free-flow time, clamped at zero.
double segment_delay(double t_in, double t_out, double length, double free_flow_speed);

}  // namespace twinsig
