#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "twinsig/controllers.hpp"
#include "twinsig/delay.hpp"
#include "twinsig/demand.hpp"
#include "twinsig/network.hpp"
#include "twinsig/signal.hpp"

namespace twinsig {

struct VehicleParams {
  double length{5.0};
  double max_accel{2.6};
  double max_decel{4.5};
  double min_gap{2.5};
};

struct SimClock {
  double t{0.0};
  double dt{1.0};
  double horizon{3600.0};
  double warmup{600.0};
  double cooldown{600.0};

  double measured_start() const { return warmup; }
  double measured_end() const { return horizon - cooldown; }
  bool in_measured_window(double time) const { return time >= measured_start() && time <= measured_end(); }
};

/// Throws InvalidArgument unless dt > 0, horizon > 0 and the warm-up and
/// cool-down leave a non-empty measured window.
void validate(const SimClock& clock);

struct ScheduledDeparture {
  std::uint32_t vehicle_id{};
  std::uint32_t flow_index{};
  double depart_time{};
  double depart_speed{};
  Route route;
};

/// Departures of every flow over [0, horizon), each flow drawing from its
/// own stream seeded by stream_seed(root_seed, "flow:<od label>"). Sorted by
/// (depart_time, flow index); vehicle ids follow that order.
std::vector<ScheduledDeparture> schedule_departures(const Network& net, const DemandScenario& scenario, double horizon,
                                                    std::uint64_t root_seed, DepartureMode mode);

enum class VehicleState : std::uint8_t { Pending, Active, Done };

struct Vehicle {
  std::uint32_t id{};
  const ScheduledDeparture* departure{};
  std::size_t route_index{};
  double position{};
  double speed{};
  DelayLedger ledger;
  double entry_time_current_segment{};
  double insert_time{};
  int lane{};
  bool in_pocket{};
  bool committed{};  // passed the yellow decision point; clears the junction
  VehicleState state{VehicleState::Pending};
  std::uint64_t updated_step{~0ULL};

  SegmentId segment() const { return departure->route[route_index]; }
  bool on_last_segment() const { return route_index + 1 == departure->route.size(); }
};

/// One completed segment traversal.
struct TraversalRecord {
  std::uint32_t vehicle_id{};
  SegmentId segment;
  Movement movement{Movement::EBT};
  double t_in{};
  double t_out{};
  double stopped_delay{};  // stopped delay accrued on this segment
  double carried_over{};   // carried over from the segment before it
  double segment_delay{};
};

struct TrajectoryRow {
  double t{};
  std::uint32_t vehicle_id{};
  SegmentId segment;
  double position{};
  double speed{};
  double waiting{};
  double accumulated{};
};

struct SignalLogRow {
  double t{};
  NodeId intersection;
  Phase phase;
  Stage stage{Stage::Green};
  double green_elapsed{};
  SignalStatus status{SignalStatus::Ok};
  std::string lights;  // one light code per movement, EBT..SBL
};

struct DecisionRecord {
  double t{};
  Algorithm algorithm{Algorithm::Baseline};
  DecisionInput input;
  Decision decision;
};

struct SwapEvent {
  double t{};
  Algorithm from{Algorithm::Baseline};
  Algorithm to{Algorithm::Baseline};
  Stage stage{Stage::Green};
  double green_elapsed{};
};

struct StepEvents {
  std::vector<std::uint32_t> inserted;
  std::vector<std::uint32_t> arrived;
  std::size_t crossings{};
};

using TrajectorySink = std::function<void(const TrajectoryRow&)>;

struct SimulationOptions {
  SimClock clock;
  VehicleParams vehicle;
  SignalTiming timing;
  double fixed_split{30.0};
  Algorithm algorithm{Algorithm::Baseline};
  /// DT2: count stopped delay from the previous approach for pocket vehicles.
  bool left_turn_carry_over{true};
  bool record_signals{false};
  TrajectorySink trajectory_sink;
};

/// Discrete-time microsimulation of a network with one adaptive subject
/// intersection and fixed-time signals elsewhere. Single-threaded; owns all
/// mutable state, reads the Network immutably.
class Simulation {
 public:
  Simulation(const Network& net, std::vector<ScheduledDeparture> departures, SimulationOptions options);

  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  StepEvents step();
  void run_until(double t_end);
  void run();
  bool finished() const;

  double time() const { return clock_.t; }
  const SimClock& clock() const { return clock_; }
  const Network& network() const { return net_; }

  Algorithm algorithm() const { return algorithm_; }
  /// Swap the subject controller at its next green-stage decision point.
  void request_algorithm(Algorithm next);
  std::optional<Algorithm> pending_algorithm() const { return pending_algorithm_; }

  IntersectionObservation observe_subject() const;
  const ControllerTimer& subject_timer() const { return timer_; }
  Light light(NodeId intersection, Movement movement) const;

  std::span<const ScheduledDeparture> departures() const { return departures_; }
  const Vehicle& vehicle(std::uint32_t id) const { return vehicles_.at(id); }
  std::span<const std::uint32_t> active_vehicles() const { return active_; }
  /// Lanes of a segment: through lanes first, pocket lane last. Each lists
  /// vehicle ids front (nearest the stop line) to back.
  std::span<const std::vector<std::uint32_t>> lanes(SegmentId segment) const { return lanes_.at(segment.value); }

  std::size_t inserted_count() const { return inserted_; }
  std::size_t arrived_count() const { return arrived_; }
  std::size_t on_network_count() const { return active_.size(); }
  std::size_t waiting_to_insert() const;

  const std::vector<TraversalRecord>& traversals() const { return traversals_; }
  const std::vector<SignalLogRow>& signal_log() const { return signal_log_; }
  const std::vector<DecisionRecord>& decisions() const { return decisions_; }
  const std::vector<SwapEvent>& swaps() const { return swaps_; }

 private:
  void tick_signals(double t);
  void insert_pending(double t, StepEvents& events);
  void move_vehicle(std::uint32_t id, double t, StepEvents& events);
  int choose_lane(SegmentId segment) const;
  double tail_rear(SegmentId segment, int lane) const;
  void remove_from_lane(SegmentId segment, int lane, std::uint32_t id);
  std::optional<Phase> decide_subject(double t);

  const Network& net_;
  std::vector<ScheduledDeparture> departures_;
  SimulationOptions options_;
  SimClock clock_;
  std::uint64_t step_index_{};

  std::vector<Vehicle> vehicles_;
  std::vector<std::uint32_t> active_;
  std::vector<std::vector<std::uint32_t>> pending_by_origin_;
  std::size_t next_departure_{};
  std::vector<std::vector<std::vector<std::uint32_t>>> lanes_;

  NodeId subject_;
  ControllerTimer timer_;
  FixedTimeSignal fixed_;
  Algorithm algorithm_;
  std::optional<Algorithm> pending_algorithm_;

  std::size_t inserted_{};
  std::size_t arrived_{};
  std::vector<TraversalRecord> traversals_;
  std::vector<SignalLogRow> signal_log_;
  std::vector<DecisionRecord> decisions_;
  std::vector<SwapEvent> swaps_;
};

}  // namespace twinsig
