#include "twinsig/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include <fmt/format.h>

#include "twinsig/error.hpp"
#include "twinsig/rng.hpp"

namespace twinsig {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Vehicles held by a signal stop this far short of the stop line.
constexpr double kStopSetback = 1.0;

/// Largest speed for this step that still lets the vehicle stop behind an
/// obstacle `gap` meters ahead moving at `leader_speed`, assuming both brake
/// at `decel` from here on. Never exceeds gap / dt, so positions cannot
/// overlap after the update.
double safe_speed(double gap, double leader_speed, double decel, double dt) {
  if (gap <= 0.0) return 0.0;
  const double bdt = decel * dt;
  const double lead = std::max(0.0, leader_speed - bdt);
  const double v = -bdt + std::sqrt(bdt * bdt + 2.0 * decel * gap + lead * lead);
  return std::clamp(v, 0.0, gap / dt);
}

std::string od_label(const Network& net, const OdPair& od) {
  std::string label = fmt::format("flow:{}->{}", net.segment(od.origin).name, net.segment(od.destination).name);
  for (auto v : od.via) label += fmt::format("|{}", net.segment(v).name);
  return label;
}

}  // namespace

void validate(const SimClock& clock) {
  if (!(clock.dt > 0.0) || !(clock.horizon > 0.0)) throw InvalidArgument("dt and horizon must be positive");
  if (clock.warmup < 0.0 || clock.cooldown < 0.0) throw InvalidArgument("warm-up and cool-down must be non-negative");
  if (clock.warmup + clock.cooldown >= clock.horizon) throw InvalidArgument("warm-up plus cool-down must be shorter than the horizon");
}

std::vector<ScheduledDeparture> schedule_departures(const Network& net, const DemandScenario& scenario, double horizon,
                                                    std::uint64_t root_seed, DepartureMode mode) {
  std::vector<ScheduledDeparture> all;
  std::map<std::string, int> seen;
  for (std::size_t i = 0; i < scenario.flows.size(); ++i) {
    const auto& flow = scenario.flows[i];
    std::string label = od_label(net, flow.od);
    const int dup = seen[label]++;
    if (dup > 0) label += fmt::format("#{}", dup);
    const auto deps = generate_departures(net, flow, horizon, stream_seed(root_seed, label), mode);
    for (const auto& d : deps) {
      all.push_back({0, static_cast<std::uint32_t>(i), d.depart_time, flow.depart_speed, d.route});
    }
  }
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    if (a.depart_time != b.depart_time) return a.depart_time < b.depart_time;
    return a.flow_index < b.flow_index;
  });
  for (std::size_t k = 0; k < all.size(); ++k) all[k].vehicle_id = static_cast<std::uint32_t>(k);
  return all;
}

Simulation::Simulation(const Network& net, std::vector<ScheduledDeparture> departures, SimulationOptions options)
    : net_(net),
      departures_(std::move(departures)),
      options_(std::move(options)),
      clock_(options_.clock),
      subject_(net.subject_intersection()),
      timer_(make_timer(Phase{0}, options_.timing)),
      fixed_(options_.fixed_split, options_.timing),
      algorithm_(options_.algorithm) {
  validate(clock_);
  const auto& vp = options_.vehicle;
  if (!(vp.length > 0.0) || !(vp.max_accel > 0.0) || !(vp.max_decel > 0.0) || vp.min_gap < 0.0) {
    throw InvalidArgument("vehicle parameters must be positive");
  }
  vehicles_.resize(departures_.size());
  for (std::size_t k = 0; k < departures_.size(); ++k) {
    auto& d = departures_[k];
    if (d.vehicle_id != k) throw InvalidArgument("departure vehicle ids must be dense and sorted");
    if (d.route.empty()) throw InvalidArgument("departure with empty route");
    if (k > 0 && d.depart_time < departures_[k - 1].depart_time) throw InvalidArgument("departures must be time-sorted");
    vehicles_[k].id = d.vehicle_id;
    vehicles_[k].departure = &d;
  }
  pending_by_origin_.assign(net_.segments().size(), {});
  lanes_.resize(net_.segments().size());
  for (const auto& s : net_.segments()) lanes_[s.id.value].assign(static_cast<std::size_t>(s.lane_count) + 1, {});
}

void Simulation::request_algorithm(Algorithm next) {
  if (next == algorithm_) {
    pending_algorithm_.reset();
    return;
  }
  pending_algorithm_ = next;
}

std::size_t Simulation::waiting_to_insert() const {
  std::size_t n = 0;
  for (const auto& q : pending_by_origin_) n += q.size();
  return n;
}

bool Simulation::finished() const { return clock_.t >= clock_.horizon - 1e-9; }

Light Simulation::light(NodeId intersection, Movement movement) const {
  if (intersection == subject_) return light_for(timer_, movement);
  return fixed_.light(movement, clock_.t);
}

IntersectionObservation Simulation::observe_subject() const {
  IntersectionObservation obs;
  obs.intersection = subject_;
  obs.time = clock_.t;
  for (auto m : kAllMovements) {
    auto& a = obs.approaches[index_of(m)];
    auto seg_id = net_.incoming_with_heading(subject_, heading_of(m));
    if (!seg_id) continue;
    const auto& seg = net_.segment(*seg_id);
    a.approach = {*seg_id, m};
    const auto& lanes = lanes_[seg_id->value];
    if (is_left(m)) {
      a.lane_count = 1;
      a.lane_length = seg.pocket_length;
      for (auto id : lanes.back()) {
        auto ledger = vehicles_[id].ledger;
        if (!options_.left_turn_carry_over) ledger.carried_over = 0.0;
        a.ledgers.push_back(ledger);
      }
    } else {
      a.lane_count = seg.lane_count;
      a.lane_length = seg.length;
      for (std::size_t l = 0; l + 1 < lanes.size(); ++l) {
        for (auto id : lanes[l]) a.ledgers.push_back(vehicles_[id].ledger);
      }
    }
  }
  return obs;
}

std::optional<Phase> Simulation::decide_subject(double t) {
  if (pending_algorithm_) {
    swaps_.push_back({t, algorithm_, *pending_algorithm_, timer_.stage, timer_.green_elapsed});
    algorithm_ = *pending_algorithm_;
    pending_algorithm_.reset();
  }
  const auto obs = observe_subject();
  DecisionRecord rec;
  rec.t = t;
  rec.algorithm = algorithm_;
  rec.input = build_input(algorithm_, obs);
  rec.decision = decide_with(algorithm_, rec.input);
  decisions_.push_back(rec);
  return rec.decision.proposed_phase;
}

void Simulation::tick_signals(double t) {
  timer_ = decide(timer_, t, [&] { return decide_subject(t); });
  if (!options_.record_signals) return;
  for (auto id : net_.intersections()) {
    SignalDisplay d = id == subject_ ? display_of(timer_) : fixed_.display(t);
    std::string lights;
    for (auto m : kAllMovements) lights += light_code(light(id, m));
    signal_log_.push_back({t, id, d.phase, d.stage, d.green_elapsed, d.status, std::move(lights)});
  }
}

double Simulation::tail_rear(SegmentId segment, int lane) const {
  const auto& q = lanes_[segment.value][static_cast<std::size_t>(lane)];
  if (q.empty()) return kInf;
  const auto& v = vehicles_[q.back()];
  return v.position - options_.vehicle.length;
}

int Simulation::choose_lane(SegmentId segment) const {
  const int n = net_.segment(segment).lane_count;
  int best = 0;
  double best_room = tail_rear(segment, 0);
  for (int l = 1; l < n; ++l) {
    const double room = tail_rear(segment, l);
    if (room > best_room) {
      best = l;
      best_room = room;
    }
  }
  return best;
}

void Simulation::remove_from_lane(SegmentId segment, int lane, std::uint32_t id) {
  auto& q = lanes_[segment.value][static_cast<std::size_t>(lane)];
  q.erase(std::find(q.begin(), q.end(), id));
}

void Simulation::insert_pending(double t, StepEvents& events) {
  while (next_departure_ < departures_.size() && departures_[next_departure_].depart_time <= t + 1e-9) {
    const auto& d = departures_[next_departure_];
    pending_by_origin_[d.route.front().value].push_back(d.vehicle_id);
    ++next_departure_;
  }
  const auto& vp = options_.vehicle;
  for (std::size_t s = 0; s < pending_by_origin_.size(); ++s) {
    auto& queue = pending_by_origin_[s];
    const SegmentId seg_id{static_cast<std::uint32_t>(s)};
    std::size_t taken = 0;
    while (taken < queue.size()) {
      const int lane = choose_lane(seg_id);
      const double room = tail_rear(seg_id, lane) - vp.min_gap;
      if (room < 0.0) break;
      auto& v = vehicles_[queue[taken]];
      const auto& lane_q = lanes_[s][static_cast<std::size_t>(lane)];
      const double leader_speed = lane_q.empty() ? 0.0 : vehicles_[lane_q.back()].speed;
      double speed = std::min(v.departure->depart_speed, net_.segment(seg_id).free_flow_speed);
      if (!lane_q.empty()) speed = std::min(speed, safe_speed(room, leader_speed, vp.max_decel, clock_.dt));
      v.state = VehicleState::Active;
      v.position = 0.0;
      v.speed = speed;
      v.lane = lane;
      v.entry_time_current_segment = t;
      v.insert_time = t;
      lanes_[s][static_cast<std::size_t>(lane)].push_back(v.id);
      active_.push_back(v.id);
      events.inserted.push_back(v.id);
      ++inserted_;
      ++taken;
    }
    queue.erase(queue.begin(), queue.begin() + static_cast<std::ptrdiff_t>(taken));
  }
}

void Simulation::move_vehicle(std::uint32_t id, double t, StepEvents& events) {
  auto& v = vehicles_[id];
  v.updated_step = step_index_;
  const auto& vp = options_.vehicle;
  const double dt = clock_.dt;
  const auto& route = v.departure->route;
  const SegmentId seg_id = route[v.route_index];
  const auto& seg = net_.segment(seg_id);
  const bool last = v.on_last_segment();
  const std::optional<Turn> turn = turn_at(net_, route, v.route_index);
  const bool turning_left = turn == Turn::Left;
  const Movement movement = movement_for(seg.heading, turning_left);

  double limit = seg.free_flow_speed;
  Light signal = Light::Green;
  if (!last) {
    signal = light(seg.to, movement);
    if (signal == Light::FlashingYellow) limit *= 0.5;
  }
  double vmax = std::min(v.speed + vp.max_accel * dt, limit);

  const auto& lane_q = lanes_[seg_id.value][static_cast<std::size_t>(v.lane)];
  const auto it = std::find(lane_q.begin(), lane_q.end(), id);
  if (it != lane_q.begin()) {
    const auto& leader = vehicles_[*(it - 1)];
    const double gap = leader.position - vp.length - v.position - vp.min_gap;
    vmax = std::min(vmax, safe_speed(gap, leader.speed, vp.max_decel, dt));
  }
  const int pocket_lane = seg.lane_count;
  const bool wants_pocket = !last && turning_left && !v.in_pocket && seg.has_pocket();
  if (wants_pocket) {
    const auto& pocket = lanes_[seg_id.value][static_cast<std::size_t>(pocket_lane)];
    if (!pocket.empty()) {
      const auto& tail = vehicles_[pocket.back()];
      const double gap = tail.position - vp.length - v.position - vp.min_gap;
      vmax = std::min(vmax, safe_speed(gap, tail.speed, vp.max_decel, dt));
    }
  }

  const double remaining = seg.length - v.position;
  bool may_cross = last;
  int target_lane = 0;
  std::optional<SegmentId> next_id;
  if (!last) {
    bool must_stop = false;
    switch (signal) {
      case Light::Green:
      case Light::FlashingYellow: break;
      case Light::Yellow:
        if (!v.committed) {
          const double stop_v = safe_speed(remaining - kStopSetback, 0.0, vp.max_decel, dt);
          if (stop_v >= v.speed - vp.max_decel * dt - 1e-9) {
            must_stop = true;
          } else {
            v.committed = true;
          }
        }
        break;
      case Light::Red: must_stop = !v.committed; break;
    }
    if (must_stop) {
      vmax = std::min(vmax, safe_speed(remaining - kStopSetback, 0.0, vp.max_decel, dt));
    } else {
      next_id = route[v.route_index + 1];
      target_lane = choose_lane(*next_id);
      const auto& target_q = lanes_[next_id->value][static_cast<std::size_t>(target_lane)];
      if (!target_q.empty()) {
        const auto& tail = vehicles_[target_q.back()];
        const double gap = remaining + tail.position - vp.length - vp.min_gap;
        vmax = std::min(vmax, safe_speed(gap, tail.speed, vp.max_decel, dt));
      }
      may_cross = true;
    }
  }

  const double new_speed = std::max(0.0, vmax);
  const double new_pos = v.position + new_speed * dt;
  v.speed = new_speed;

  if (may_cross && new_pos >= seg.length) {
    const double t_out = t + dt;
    TraversalRecord rec;
    rec.vehicle_id = id;
    rec.segment = seg_id;
    rec.movement = movement;
    rec.t_in = v.entry_time_current_segment;
    rec.t_out = t_out;
    rec.stopped_delay = vehicle_delay_dt1(v.ledger);
    rec.carried_over = v.ledger.carried_over;
    rec.segment_delay = segment_delay(rec.t_in, rec.t_out, seg.length, seg.free_flow_speed);
    traversals_.push_back(rec);
    remove_from_lane(seg_id, v.lane, id);
    ++events.crossings;

    if (last) {
      v.state = VehicleState::Done;
      v.position = seg.length;
      active_.erase(std::find(active_.begin(), active_.end(), id));
      events.arrived.push_back(id);
      ++arrived_;
      return;
    }
    const auto& next = net_.segment(*next_id);
    v.ledger = on_approach_transition(v.ledger);
    ++v.route_index;
    v.entry_time_current_segment = t_out;
    v.position = std::min(new_pos - seg.length, next.length);
    v.lane = target_lane;
    v.in_pocket = false;
    v.committed = false;
    lanes_[next_id->value][static_cast<std::size_t>(target_lane)].push_back(id);
    return;
  }

  v.position = std::min(new_pos, seg.length);
  if (wants_pocket && v.position >= seg.pocket_start()) {
    remove_from_lane(seg_id, v.lane, id);
    v.lane = pocket_lane;
    v.in_pocket = true;
    lanes_[seg_id.value][static_cast<std::size_t>(pocket_lane)].push_back(id);
  }
}

StepEvents Simulation::step() {
  StepEvents events;
  if (finished()) return events;
  const double t = clock_.t;
  const double dt = clock_.dt;

  tick_signals(t);
  insert_pending(t, events);

  std::vector<std::uint32_t> order;
  for (const auto& seg : net_.segments()) {
    const auto& lanes = lanes_[seg.id.value];
    // Pocket first, then through lanes; each lane front to back.
    order.assign(lanes.back().begin(), lanes.back().end());
    for (std::size_t l = 0; l + 1 < lanes.size(); ++l) order.insert(order.end(), lanes[l].begin(), lanes[l].end());
    for (auto id : order) {
      if (vehicles_[id].updated_step == step_index_) continue;
      move_vehicle(id, t, events);
    }
  }

  for (auto id : active_) vehicles_[id].ledger = update_waiting(vehicles_[id].ledger, vehicles_[id].speed, dt);

  timer_ = advance(timer_, dt);
  ++step_index_;
  clock_.t = static_cast<double>(step_index_) * dt;

  if (options_.trajectory_sink) {
    std::vector<std::uint32_t> sorted(active_.begin(), active_.end());
    std::sort(sorted.begin(), sorted.end());
    for (auto id : sorted) {
      const auto& v = vehicles_[id];
      options_.trajectory_sink({clock_.t, id, v.segment(), v.position, v.speed, v.ledger.waiting, v.ledger.accumulated});
    }
  }
  return events;
}

void Simulation::run_until(double t_end) {
  const double end = std::min(t_end, clock_.horizon);
  while (clock_.t < end - 1e-9) step();
}

void Simulation::run() { run_until(clock_.horizon); }

}  // namespace twinsig
