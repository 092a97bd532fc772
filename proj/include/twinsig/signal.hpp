#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>

#include "twinsig/movement.hpp"

namespace twinsig {

enum class Light : std::uint8_t { Red, Yellow, Green, FlashingYellow };

char light_code(Light l);

/// Row of the nine-phase table. 0/2/4/6 serve green, 1/3/5/7 are their
/// yellows, 8 is all-red.
class Phase {
 public:
  constexpr Phase() = default;
  /// Throws InvalidArgument outside 0..8.
  explicit Phase(int index);

  constexpr int index() const { return index_; }
  constexpr bool is_green_serving() const { return index_ < 8 && index_ % 2 == 0; }
  constexpr bool is_yellow() const { return index_ % 2 == 1; }
  constexpr bool is_all_red() const { return index_ == 8; }

  auto operator<=>(const Phase&) const = default;

 private:
  int index_{0};
};

inline const Phase kAllRedPhase{8};

/// Table lookup: which light a movement sees in a phase.
Light phase_for_movement(Phase phase, Movement movement);

/// Green-serving phase that gives `movement` its green.
Phase green_phase_for(Movement movement);

enum class Stage : std::uint8_t { Green, Yellow, AllRed };
enum class SignalStatus : std::uint8_t { Ok, OutOfOrder };

std::string_view to_string(Stage s);

struct SignalTiming {
  double yellow{2.0};
  double all_red{1.0};
  double min_green{5.0};
  double decision_period{5.0};
};

struct ControllerTimer {
  Phase current_phase{};
  Stage stage{Stage::Green};
  double stage_elapsed{};
  double green_elapsed{};
  std::optional<Phase> pending_target;
  SignalStatus status{SignalStatus::Ok};
  SignalTiming timing{};
};

ControllerTimer make_timer(Phase initial = Phase{0}, SignalTiming timing = {});

/// Start a transition toward `proposed` (a green-serving phase). Same phase is
/// a no-op. Throws RejectedRequest unless the timer is in its green stage.
ControllerTimer request_phase(ControllerTimer timer, Phase proposed);

ControllerTimer set_out_of_order(ControllerTimer timer);

/// True when a decision may be consulted at sim time t: green stage, green
/// held strictly longer than the minimum, and t on the decision cadence.
bool decision_due(const ControllerTimer& timer, double t);

/// Yields the proposed green phase; nullopt means no movement matched and
/// the controller must go out of order.
using DecisionSource = std::function<std::optional<Phase>()>;

struct SignalDisplay {
  Phase phase;
  Stage stage{Stage::Green};
  double green_elapsed{};
  SignalStatus status{SignalStatus::Ok};
};

struct TickResult {
  ControllerTimer timer;  // state at t + dt
  SignalDisplay shown;    // what was displayed during [t, t + dt)
  bool consulted{};
};

/// Consult the source if due at t, then advance the stage clocks by dt.
ControllerTimer decide(ControllerTimer timer, double t, const DecisionSource& source, bool* consulted = nullptr);
ControllerTimer advance(ControllerTimer timer, double dt);
TickResult tick(const ControllerTimer& timer, double t, double dt, const DecisionSource& source);

SignalDisplay display_of(const ControllerTimer& timer);
Light light_for(const ControllerTimer& timer, Movement movement);

/// Fixed-time two-phase plan for non-subject intersections: north-south
/// (through and left) then east-west, each `split` seconds including its
/// yellow and all-red. Lefts run permissively with their through movement.
class FixedTimeSignal {
 public:
  explicit FixedTimeSignal(double split = 30.0, SignalTiming timing = {});

  Light light(Movement movement, double t) const;
  SignalDisplay display(double t) const;
  double cycle() const { return 2.0 * split_; }

 private:
  double split_;
  SignalTiming timing_;
};

}  // namespace twinsig
