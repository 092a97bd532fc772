#include "twinsig/delay.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "twinsig/error.hpp"

namespace twinsig {

DelayLedger update_waiting(DelayLedger ledger, double speed, double dt) {
  if (speed < 0.0 || !(dt > 0.0)) throw InvalidArgument("update_waiting requires speed >= 0 and dt > 0");
  if (speed < kStoppedSpeed) {
    ledger.waiting += dt;
    ledger.accumulated += dt;
  } else {
    ledger.waiting = 0.0;
  }
  return ledger;
}

double vehicle_delay_dt1(const DelayLedger& ledger) {
  const double d = ledger.accumulated - ledger.entry_accumulated;
  if (d < 0.0) {
    throw LedgerCorruption(fmt::format("entry snapshot {} exceeds accumulated delay {}", ledger.entry_accumulated,
                                       ledger.accumulated));
  }
  return d;
}

double vehicle_delay_dt2(const DelayLedger& ledger) { return vehicle_delay_dt1(ledger) + ledger.carried_over; }

double vehicle_delay(const DelayLedger& ledger, DelayVariant variant) {
  return variant == DelayVariant::DT1 ? vehicle_delay_dt1(ledger) : vehicle_delay_dt2(ledger);
}

DelayLedger on_approach_transition(DelayLedger ledger) {
  ledger.carried_over = ledger.accumulated - ledger.entry_accumulated;
  ledger.entry_accumulated = ledger.accumulated;
  return ledger;
}

ApproachDelaySnapshot average_approach_delay(const Approach& approach, std::span<const DelayLedger> vehicles,
                                             DelayVariant variant) {
  ApproachDelaySnapshot snap{approach, {}, 0.0};
  snap.vehicle_delays.reserve(vehicles.size());
  double sum = 0.0;
  for (const auto& l : vehicles) {
    snap.vehicle_delays.push_back(vehicle_delay(l, variant));
    sum += snap.vehicle_delays.back();
  }
  if (!vehicles.empty()) snap.average = sum / static_cast<double>(vehicles.size());
  return snap;
}

double segment_delay(double t_in, double t_out, double length, double free_flow_speed) {
  if (t_out < t_in) throw InvalidArgument("segment_delay: t_out precedes t_in");
  if (!(length > 0.0) || !(free_flow_speed > 0.0)) throw InvalidArgument("segment_delay: length and free-flow speed must be positive");
  return std::max(0.0, (t_out - t_in) - length / free_flow_speed);
}

}  // namespace twinsig
