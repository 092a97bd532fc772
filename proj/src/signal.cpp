#include "twinsig/signal.hpp"

#include <cmath>

#include <fmt/format.h>

#include "twinsig/error.hpp"

namespace twinsig {

namespace {

constexpr double kEps = 1e-9;

// Rows are phases 0..8; columns follow the Movement enum order
// (EBT WBT NBT SBT EBL WBL NBL SBL).
constexpr char kPhaseTable[9][kMovementCount + 1] = {
    "RRGGRRRR",  // 0: NBT SBT
    "RRYYRRRR",  // 1
    "GGRRRRRR",  // 2: EBT WBT
    "YYRRRRRR",  // 3
    "RRRRGGRR",  // 4: EBL WBL
    "RRRRYYRR",  // 5
    "RRRRRRGG",  // 6: NBL SBL
    "RRRRRRYY",  // 7
    "RRRRRRRR",  // 8: all red
};

Light from_code(char c) {
  switch (c) {
    case 'G': return Light::Green;
    case 'Y': return Light::Yellow;
    default: return Light::Red;
  }
}

bool is_multiple(double t, double period) {
  const double q = t / period;
  return std::abs(q - std::round(q)) * period < 1e-6;
}

}  // namespace

char light_code(Light l) {
  switch (l) {
    case Light::Red: return 'R';
    case Light::Yellow: return 'Y';
    case Light::Green: return 'G';
    case Light::FlashingYellow: return 'F';
  }
  return '?';
}

Phase::Phase(int index) : index_(index) {
  if (index < 0 || index > 8) throw InvalidArgument(fmt::format("phase index {} outside 0..8", index));
}

Light phase_for_movement(Phase phase, Movement movement) {
  return from_code(kPhaseTable[phase.index()][index_of(movement)]);
}

Phase green_phase_for(Movement movement) {
  switch (movement) {
    case Movement::NBT:
    case Movement::SBT: return Phase{0};
    case Movement::EBT:
    case Movement::WBT: return Phase{2};
    case Movement::EBL:
    case Movement::WBL: return Phase{4};
    case Movement::NBL:
    case Movement::SBL: return Phase{6};
  }
  return Phase{0};
}

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::Green: return "green";
    case Stage::Yellow: return "yellow";
    case Stage::AllRed: return "all_red";
  }
  return "?";
}

ControllerTimer make_timer(Phase initial, SignalTiming timing) {
  if (!initial.is_green_serving()) throw InvalidArgument("initial phase must be green-serving");
  ControllerTimer t;
  t.current_phase = initial;
  t.timing = timing;
  return t;
}

ControllerTimer request_phase(ControllerTimer timer, Phase proposed) {
  if (!proposed.is_green_serving()) throw InvalidArgument(fmt::format("phase {} is not green-serving", proposed.index()));
  if (timer.status == SignalStatus::OutOfOrder) throw RejectedRequest("controller is out of order");
  if (timer.stage != Stage::Green) {
    throw RejectedRequest(fmt::format("phase request during {} stage", to_string(timer.stage)));
  }
  if (proposed == timer.current_phase) return timer;
  timer.pending_target = proposed;
  timer.current_phase = Phase{timer.current_phase.index() + 1};
  timer.stage = Stage::Yellow;
  timer.stage_elapsed = 0.0;
  return timer;
}

ControllerTimer set_out_of_order(ControllerTimer timer) {
  timer.status = SignalStatus::OutOfOrder;
  timer.pending_target.reset();
  return timer;
}

bool decision_due(const ControllerTimer& timer, double t) {
  return timer.status == SignalStatus::Ok && timer.stage == Stage::Green &&
         timer.green_elapsed > timer.timing.min_green + kEps && is_multiple(t, timer.timing.decision_period);
}

ControllerTimer decide(ControllerTimer timer, double t, const DecisionSource& source, bool* consulted) {
  if (consulted) *consulted = false;
  if (!decision_due(timer, t)) return timer;
  if (consulted) *consulted = true;
  const auto proposed = source();
  if (!proposed) return set_out_of_order(timer);
  return request_phase(timer, *proposed);
}

ControllerTimer advance(ControllerTimer timer, double dt) {
  if (timer.status == SignalStatus::OutOfOrder) return timer;
  timer.stage_elapsed += dt;
  switch (timer.stage) {
    case Stage::Green:
      timer.green_elapsed += dt;
      break;
    case Stage::Yellow:
      if (timer.stage_elapsed >= timer.timing.yellow - kEps) {
        timer.current_phase = kAllRedPhase;
        timer.stage = Stage::AllRed;
        timer.stage_elapsed = 0.0;
      }
      break;
    case Stage::AllRed:
      if (timer.stage_elapsed >= timer.timing.all_red - kEps) {
        timer.current_phase = *timer.pending_target;
        timer.pending_target.reset();
        timer.stage = Stage::Green;
        timer.stage_elapsed = 0.0;
        timer.green_elapsed = 0.0;
      }
      break;
  }
  return timer;
}

SignalDisplay display_of(const ControllerTimer& timer) {
  return {timer.current_phase, timer.stage, timer.green_elapsed, timer.status};
}

TickResult tick(const ControllerTimer& timer, double t, double dt, const DecisionSource& source) {
  TickResult r;
  const auto decided = decide(timer, t, source, &r.consulted);
  r.shown = display_of(decided);
  r.timer = advance(decided, dt);
  return r;
}

Light light_for(const ControllerTimer& timer, Movement movement) {
  if (timer.status == SignalStatus::OutOfOrder) return Light::FlashingYellow;
  return phase_for_movement(timer.current_phase, movement);
}

FixedTimeSignal::FixedTimeSignal(double split, SignalTiming timing) : split_(split), timing_(timing) {
  if (split_ <= timing_.yellow + timing_.all_red) throw InvalidArgument("fixed-time split shorter than its clearance");
}

SignalDisplay FixedTimeSignal::display(double t) const {
  const double cyc = cycle();
  double pos = t - std::floor((t + kEps) / cyc) * cyc;
  if (pos < 0.0) pos = 0.0;
  const bool east_west = pos >= split_ - kEps;
  const double local = east_west ? pos - split_ : pos;
  const double green = split_ - timing_.yellow - timing_.all_red;
  const int base = east_west ? 2 : 0;
  SignalDisplay d;
  if (local < green - kEps) {
    d.phase = Phase{base};
    d.stage = Stage::Green;
    d.green_elapsed = std::max(0.0, local);
  } else if (local < green + timing_.yellow - kEps) {
    d.phase = Phase{base + 1};
    d.stage = Stage::Yellow;
  } else {
    d.phase = kAllRedPhase;
    d.stage = Stage::AllRed;
  }
  return d;
}

Light FixedTimeSignal::light(Movement movement, double t) const {
  const auto d = display(t);
  if (d.stage == Stage::AllRed) return Light::Red;
  const bool serves_ns = d.phase.index() <= 1;
  const Heading h = heading_of(movement);
  const bool ns = h == Heading::North || h == Heading::South;
  if (ns != serves_ns) return Light::Red;
  return d.stage == Stage::Green ? Light::Green : Light::Yellow;
}

}  // namespace twinsig
