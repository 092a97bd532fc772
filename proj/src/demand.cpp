#include "twinsig/demand.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include <fmt/format.h>

#include "twinsig/error.hpp"
#include "twinsig/rng.hpp"

namespace twinsig {

namespace {

enum class OdRole { SubjectMajor, SubjectMinor, SubjectLeft, Background };

struct TaggedOd {
  OdPair od;
  OdRole role;
};

struct GridShape {
  int rows{};
  int cols{};
  int subject_row{};
  int subject_col{};
};

GridShape grid_shape(const Network& net) {
  GridShape g;
  for (const auto& n : net.nodes()) {
    if (n.kind != NodeKind::Intersection) continue;
    int r = 0;
    int c = 0;
    if (std::sscanf(n.name.c_str(), "I%d_%d", &r, &c) != 2) {
      throw InvalidArgument(fmt::format("node {} is not a grid intersection", n.name));
    }
    g.rows = std::max(g.rows, r + 1);
    g.cols = std::max(g.cols, c + 1);
    if (n.id == net.subject_intersection()) {
      g.subject_row = r;
      g.subject_col = c;
    }
  }
  if (g.rows == 0) throw InvalidArgument("network has no grid intersections");
  return g;
}

std::vector<TaggedOd> grid_od_pairs(const Network& net) {
  const auto g = grid_shape(net);
  auto name = [&](int r, int c) -> std::string {
    if (c < 0) return fmt::format("W{}", r);
    if (c >= g.cols) return fmt::format("E{}", r);
    if (r < 0) return fmt::format("S{}", c);
    if (r >= g.rows) return fmt::format("N{}", c);
    return fmt::format("I{}_{}", r, c);
  };
  auto seg = [&](int r0, int c0, int r1, int c1) -> SegmentId {
    auto from = net.find_node(name(r0, c0));
    auto to = net.find_node(name(r1, c1));
    std::optional<SegmentId> s;
    if (from && to) s = net.find_segment(*from, *to);
    if (!s) throw InvalidArgument(fmt::format("grid segment {}>{} missing", name(r0, c0), name(r1, c1)));
    return *s;
  };

  const int R = g.rows;
  const int C = g.cols;
  const int sr = g.subject_row;
  const int sc = g.subject_col;
  std::vector<TaggedOd> out;
  for (int r = 0; r < R; ++r) {
    const OdRole role = r == sr ? OdRole::SubjectMajor : OdRole::Background;
    out.push_back({{seg(r, -1, r, 0), seg(r, C - 1, r, C), {}}, role});
    out.push_back({{seg(r, C, r, C - 1), seg(r, 0, r, -1), {}}, role});
  }
  for (int c = 0; c < C; ++c) {
    const OdRole role = c == sc ? OdRole::SubjectMinor : OdRole::Background;
    out.push_back({{seg(-1, c, 0, c), seg(R - 1, c, R, c), {}}, role});
    out.push_back({{seg(R, c, R - 1, c), seg(0, c, -1, c), {}}, role});
  }
  // Left turns at the subject: EBL, WBL, NBL, SBL.
  out.push_back({{seg(sr, -1, sr, 0), seg(R - 1, sc, R, sc), {seg(sr, sc, sr + 1, sc)}}, OdRole::SubjectLeft});
  out.push_back({{seg(sr, C, sr, C - 1), seg(0, sc, -1, sc), {seg(sr, sc, sr - 1, sc)}}, OdRole::SubjectLeft});
  out.push_back({{seg(-1, sc, 0, sc), seg(sr, 0, sr, -1), {seg(sr, sc, sr, sc - 1)}}, OdRole::SubjectLeft});
  out.push_back({{seg(R, sc, R - 1, sc), seg(sr, C - 1, sr, C), {seg(sr, sc, sr, sc + 1)}}, OdRole::SubjectLeft});
  return out;
}

}  // namespace

std::string_view to_string(DepartureMode mode) { return mode == DepartureMode::Poisson ? "poisson" : "uniform"; }

DepartureMode parse_departure_mode(std::string_view token) {
  if (token == "poisson") return DepartureMode::Poisson;
  if (token == "uniform") return DepartureMode::Uniform;
  throw InvalidArgument(fmt::format("unknown departure mode '{}' (valid: poisson, uniform)", token));
}

std::string_view to_string(DemandClass c) {
  switch (c) {
    case DemandClass::Low: return "low";
    case DemandClass::Moderate: return "moderate";
    case DemandClass::High: return "high";
  }
  return "?";
}

DemandClass demand_class_for(int scenario_id) {
  if (scenario_id < 1 || scenario_id > 11) throw InvalidArgument(fmt::format("scenario id {} outside 1..11", scenario_id));
  if (scenario_id <= 3) return DemandClass::Low;
  if (scenario_id <= 7) return DemandClass::Moderate;
  return DemandClass::High;
}

std::vector<double> departure_times(double vph, double horizon, std::uint64_t seed, DepartureMode mode) {
  if (!(horizon > 0.0)) throw InvalidArgument("horizon must be positive");
  if (vph < 0.0 || !std::isfinite(vph)) throw InvalidArgument("vph must be finite and non-negative");
  std::vector<double> times;
  if (vph == 0.0) return times;
  if (mode == DepartureMode::Uniform) {
    const auto n = static_cast<std::size_t>(std::floor(vph * horizon / 3600.0));
    const double spacing = 3600.0 / vph;
    times.reserve(n);
    for (std::size_t k = 0; k < n; ++k) times.push_back(static_cast<double>(k) * spacing);
    return times;
  }
  std::mt19937_64 engine(seed);
  const double rate = vph / 3600.0;
  double t = 0.0;
  for (;;) {
    t += -std::log1p(-unit_uniform(engine)) / rate;
    if (t >= horizon) break;
    times.push_back(t);
  }
  return times;
}

Route route_for(const Network& net, const OdPair& od) {
  return route_through(net, od.origin, od.via, od.destination);
}

std::vector<Departure> generate_departures(const Network& net, const Flow& flow, double horizon, std::uint64_t seed,
                                           DepartureMode mode) {
  const auto times = departure_times(flow.vph, horizon, seed, mode);
  std::vector<Departure> out;
  if (times.empty()) return out;
  const Route route = route_for(net, flow.od);
  out.reserve(times.size());
  for (double t : times) out.push_back({t, route});
  return out;
}

std::vector<DemandScenario> scenario_catalog(std::span<const OdPair> od_pairs, double base_vph, double ladder_factor) {
  if (!(base_vph > 0.0) || !(ladder_factor > 0.0)) throw InvalidArgument("base_vph and ladder_factor must be positive");
  std::vector<DemandScenario> out;
  for (int k = 1; k <= 11; ++k) {
    DemandScenario sc;
    sc.scenario_id = k;
    sc.demand_class = demand_class_for(k);
    const double vph = base_vph + (k - 1) * ladder_factor * base_vph;
    for (const auto& od : od_pairs) sc.flows.push_back({od, vph, 0.0});
    out.push_back(std::move(sc));
  }
  return out;
}

std::vector<OdPair> default_od_pairs(const Network& grid) {
  std::vector<OdPair> out;
  for (auto& t : grid_od_pairs(grid)) out.push_back(std::move(t.od));
  return out;
}

DemandScenario asymmetric_scenario(const Network& grid, const AsymmetricDemand& demand, int scenario_id) {
  DemandScenario sc;
  sc.scenario_id = scenario_id;
  sc.demand_class = demand_class_for(scenario_id);
  for (auto& t : grid_od_pairs(grid)) {
    double vph = demand.background_vph;
    switch (t.role) {
      case OdRole::SubjectMajor: vph = demand.major_through_vph; break;
      case OdRole::SubjectMinor: vph = demand.minor_through_vph; break;
      case OdRole::SubjectLeft: vph = demand.left_vph; break;
      case OdRole::Background: break;
    }
    sc.flows.push_back({std::move(t.od), vph, 0.0});
  }
  return sc;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

SegmentId segment_ref(const Network& net, const nlohmann::json& v) {
  if (v.is_string()) {
    auto s = net.find_segment(v.get<std::string>());
    if (!s) throw ConfigError(fmt::format("unknown segment '{}'", v.get<std::string>()));
    return *s;
  }
  const SegmentId id{v.get<std::uint32_t>()};
  if (id.value >= net.segments().size()) throw ConfigError(fmt::format("unknown segment id {}", id.value));
  return id;
}

}  // namespace

nlohmann::json scenario_to_json(const Network& net, const DemandScenario& scenario) {
  nlohmann::json flows = nlohmann::json::array();
  for (const auto& f : scenario.flows) {
    nlohmann::json via = nlohmann::json::array();
    for (auto v : f.od.via) via.push_back(net.segment(v).name);
    flows.push_back({{"origin", net.segment(f.od.origin).name},
                     {"destination", net.segment(f.od.destination).name},
                     {"via", std::move(via)},
                     {"vph", f.vph},
                     {"depart_speed", f.depart_speed}});
  }
  return {{"scenario_id", scenario.scenario_id},
          {"demand_class", to_string(scenario.demand_class)},
          {"flows", std::move(flows)}};
}

DemandScenario scenario_from_json(const Network& net, const nlohmann::json& doc) {
  try {
    DemandScenario sc;
    sc.scenario_id = doc.at("scenario_id").get<int>();
    sc.demand_class = demand_class_for(sc.scenario_id);
    for (const auto& f : doc.at("flows")) {
      Flow flow;
      flow.od.origin = segment_ref(net, f.at("origin"));
      flow.od.destination = segment_ref(net, f.at("destination"));
      if (f.contains("via")) {
        for (const auto& v : f.at("via")) flow.od.via.push_back(segment_ref(net, v));
      }
      flow.vph = f.at("vph").get<double>();
      flow.depart_speed = f.value("depart_speed", 0.0);
      if (flow.vph < 0.0) throw ConfigError("flow vph must be non-negative");
      route_for(net, flow.od);
      sc.flows.push_back(std::move(flow));
    }
    return sc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("malformed scenario document: {}", e.what()));
  } catch (const InvalidArgument& e) {
    throw ConfigError(fmt::format("invalid scenario: {}", e.what()));
  } catch (const NoPath& e) {
    throw ConfigError(fmt::format("invalid scenario: {}", e.what()));
  }
}

}  // namespace twinsig
