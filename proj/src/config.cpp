#include "twinsig/config.hpp"

#include <fstream>
#include <set>

#include <fmt/format.h>

#include "twinsig/error.hpp"

namespace twinsig {

namespace {

using nlohmann::json;

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("config key '{}': {}", key, e.what()));
  }
}

void reject_unknown(const json& j, const std::set<std::string>& known, std::string_view where) {
  if (!j.is_object()) throw ConfigError(fmt::format("{} must be a JSON object", where));
  for (const auto& [k, _] : j.items()) {
    if (!known.count(k)) throw ConfigError(fmt::format("unknown key '{}' in {}", k, where));
  }
}

std::string resolve(const std::string& file, const std::filesystem::path& base_dir) {
  if (file.empty()) return file;
  std::filesystem::path p(file);
  if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
  return p.string();
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open '{}'", path.string()));
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("'{}' is not valid JSON: {}", path.string(), e.what()));
  }
}

ScenarioKind parse_kind(const std::string& s) {
  if (s == "ladder") return ScenarioKind::Ladder;
  if (s == "asymmetric") return ScenarioKind::Asymmetric;
  if (s == "file") return ScenarioKind::File;
  throw ConfigError(fmt::format("unknown scenario kind '{}' (valid: ladder, asymmetric, file)", s));
}

std::string_view kind_name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::Ladder: return "ladder";
    case ScenarioKind::Asymmetric: return "asymmetric";
    case ScenarioKind::File: return "file";
  }
  return "?";
}

ScenarioSpec scenario_spec_from(const json& j, const std::filesystem::path& base_dir) {
  reject_unknown(j, {"kind", "id", "base_vph", "ladder_factor", "asymmetric", "file", "scale"}, "scenario");
  ScenarioSpec s;
  s.kind = parse_kind(get_or<std::string>(j, "kind", "ladder"));
  s.id = get_or(j, "id", s.id);
  s.base_vph = get_or(j, "base_vph", s.base_vph);
  s.ladder_factor = get_or(j, "ladder_factor", s.ladder_factor);
  s.scale = get_or(j, "scale", s.scale);
  s.file = resolve(get_or<std::string>(j, "file", ""), base_dir);
  if (auto it = j.find("asymmetric"); it != j.end()) {
    reject_unknown(*it, {"major_through_vph", "minor_through_vph", "left_vph", "background_vph"}, "scenario.asymmetric");
    auto& a = s.asymmetric;
    a.major_through_vph = get_or(*it, "major_through_vph", a.major_through_vph);
    a.minor_through_vph = get_or(*it, "minor_through_vph", a.minor_through_vph);
    a.left_vph = get_or(*it, "left_vph", a.left_vph);
    a.background_vph = get_or(*it, "background_vph", a.background_vph);
  }
  return s;
}

json scenario_spec_to(const ScenarioSpec& s) {
  const auto& a = s.asymmetric;
  return {{"kind", std::string(kind_name(s.kind))},
          {"id", s.id},
          {"base_vph", s.base_vph},
          {"ladder_factor", s.ladder_factor},
          {"asymmetric",
           {{"major_through_vph", a.major_through_vph},
            {"minor_through_vph", a.minor_through_vph},
            {"left_vph", a.left_vph},
            {"background_vph", a.background_vph}}},
          {"file", s.file},
          {"scale", s.scale}};
}

std::vector<Algorithm> parse_algorithms(const json& j) {
  std::vector<Algorithm> out;
  auto add = [&](const std::string& token) {
    try {
      out.push_back(parse_algorithm(token));
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  };
  if (j.is_string()) {
    add(j.get<std::string>());
  } else if (j.is_array()) {
    for (const auto& t : j) {
      if (!t.is_string()) throw ConfigError("algorithms must be strings");
      add(t.get<std::string>());
    }
  } else {
    throw ConfigError("algorithms must be a string or an array of strings");
  }
  return out;
}

}  // namespace

RunConfig config_from_json(const json& doc, const std::filesystem::path& base_dir) {
  reject_unknown(doc,
                 {"network", "scenario", "algorithms", "seed", "dt", "horizon", "warmup", "cooldown", "departure_mode",
                  "vehicle", "signal", "fixed_split", "left_turn_carry_over", "dsd_bin_width", "write_trajectory",
                  "parallelism", "output_dir", "twin"},
                 "config");
  RunConfig c;
  if (auto it = doc.find("network"); it != doc.end()) {
    reject_unknown(*it, {"grid", "file"}, "network");
    if (auto f = it->find("file"); f != it->end() && !f->is_null()) {
      c.grid.reset();
      c.network_file = resolve(f->get<std::string>(), base_dir);
    }
    if (auto g = it->find("grid"); g != it->end() && !g->is_null()) {
      if (!c.network_file.empty()) throw ConfigError("network: give either grid or file, not both");
      reject_unknown(*g, {"rows", "cols", "segment_length", "lane_count", "pocket_length", "free_flow_speed"},
                     "network.grid");
      GridSpec s;
      s.rows = get_or(*g, "rows", s.rows);
      s.cols = get_or(*g, "cols", s.cols);
      s.segment_length = get_or(*g, "segment_length", s.segment_length);
      s.lane_count = get_or(*g, "lane_count", s.lane_count);
      s.pocket_length = get_or(*g, "pocket_length", s.pocket_length);
      s.free_flow_speed = get_or(*g, "free_flow_speed", s.free_flow_speed);
      c.grid = s;
    }
  }
  if (auto it = doc.find("scenario"); it != doc.end()) c.scenario = scenario_spec_from(*it, base_dir);
  if (auto it = doc.find("algorithms"); it != doc.end()) c.algorithms = parse_algorithms(*it);
  c.seed = get_or(doc, "seed", c.seed);
  c.clock.dt = get_or(doc, "dt", c.clock.dt);
  c.clock.horizon = get_or(doc, "horizon", c.clock.horizon);
  c.clock.warmup = get_or(doc, "warmup", c.clock.warmup);
  c.clock.cooldown = get_or(doc, "cooldown", c.clock.cooldown);
  try {
    c.departure_mode = parse_departure_mode(get_or<std::string>(doc, "departure_mode", "poisson"));
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  if (auto it = doc.find("vehicle"); it != doc.end()) {
    reject_unknown(*it, {"length", "max_accel", "max_decel", "min_gap"}, "vehicle");
    c.vehicle.length = get_or(*it, "length", c.vehicle.length);
    c.vehicle.max_accel = get_or(*it, "max_accel", c.vehicle.max_accel);
    c.vehicle.max_decel = get_or(*it, "max_decel", c.vehicle.max_decel);
    c.vehicle.min_gap = get_or(*it, "min_gap", c.vehicle.min_gap);
  }
  if (auto it = doc.find("signal"); it != doc.end()) {
    reject_unknown(*it, {"yellow", "all_red", "min_green", "decision_period"}, "signal");
    c.signal.yellow = get_or(*it, "yellow", c.signal.yellow);
    c.signal.all_red = get_or(*it, "all_red", c.signal.all_red);
    c.signal.min_green = get_or(*it, "min_green", c.signal.min_green);
    c.signal.decision_period = get_or(*it, "decision_period", c.signal.decision_period);
  }
  c.fixed_split = get_or(doc, "fixed_split", c.fixed_split);
  c.left_turn_carry_over = get_or(doc, "left_turn_carry_over", c.left_turn_carry_over);
  c.dsd_bin_width = get_or(doc, "dsd_bin_width", c.dsd_bin_width);
  c.write_trajectory = get_or(doc, "write_trajectory", c.write_trajectory);
  c.parallelism = get_or(doc, "parallelism", c.parallelism);
  c.output_dir = get_or(doc, "output_dir", c.output_dir);
  if (auto it = doc.find("twin"); it != doc.end()) {
    reject_unknown(*it,
                   {"period", "factors", "forecast_window", "match_window", "job_horizon", "job_warmup",
                    "job_cooldown", "initial", "step_change"},
                   "twin");
    auto& t = c.twin.twin;
    t.period = get_or(*it, "period", t.period);
    t.factors = get_or(*it, "factors", t.factors);
    t.forecast_window = get_or(*it, "forecast_window", t.forecast_window);
    t.match_window = get_or(*it, "match_window", t.match_window);
    t.job_horizon = get_or(*it, "job_horizon", t.job_horizon);
    t.job_warmup = get_or(*it, "job_warmup", t.job_warmup);
    t.job_cooldown = get_or(*it, "job_cooldown", t.job_cooldown);
    try {
      t.initial = parse_algorithm(get_or<std::string>(*it, "initial", "baseline"));
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
    if (auto s = it->find("step_change"); s != it->end() && !s->is_null()) {
      reject_unknown(*s, {"t", "scenario"}, "twin.step_change");
      StepChange sc;
      sc.t = get_or(*s, "t", sc.t);
      if (auto sj = s->find("scenario"); sj != s->end()) sc.scenario = scenario_spec_from(*sj, base_dir);
      c.twin.step_change = sc;
    }
  }
  c.twin.twin.parallelism = c.parallelism;
  validate(c);
  return c;
}

json config_to_json(const RunConfig& c) {
  json network;
  if (c.grid) {
    const auto& g = *c.grid;
    network["grid"] = {{"rows", g.rows},
                       {"cols", g.cols},
                       {"segment_length", g.segment_length},
                       {"lane_count", g.lane_count},
                       {"pocket_length", g.pocket_length},
                       {"free_flow_speed", g.free_flow_speed}};
  } else {
    network["file"] = c.network_file;
  }
  std::vector<std::string> algos;
  for (auto a : c.algorithms) algos.emplace_back(to_string(a));
  const auto& t = c.twin.twin;
  json twin{{"period", t.period},
            {"factors", t.factors},
            {"forecast_window", t.forecast_window},
            {"match_window", t.match_window},
            {"job_horizon", t.job_horizon},
            {"job_warmup", t.job_warmup},
            {"job_cooldown", t.job_cooldown},
            {"initial", std::string(to_string(t.initial))},
            {"step_change", nullptr}};
  if (c.twin.step_change) {
    twin["step_change"] = {{"t", c.twin.step_change->t}, {"scenario", scenario_spec_to(c.twin.step_change->scenario)}};
  }
  return {{"network", std::move(network)},
          {"scenario", scenario_spec_to(c.scenario)},
          {"algorithms", algos},
          {"seed", c.seed},
          {"dt", c.clock.dt},
          {"horizon", c.clock.horizon},
          {"warmup", c.clock.warmup},
          {"cooldown", c.clock.cooldown},
          {"departure_mode", std::string(to_string(c.departure_mode))},
          {"vehicle",
           {{"length", c.vehicle.length},
            {"max_accel", c.vehicle.max_accel},
            {"max_decel", c.vehicle.max_decel},
            {"min_gap", c.vehicle.min_gap}}},
          {"signal",
           {{"yellow", c.signal.yellow},
            {"all_red", c.signal.all_red},
            {"min_green", c.signal.min_green},
            {"decision_period", c.signal.decision_period}}},
          {"fixed_split", c.fixed_split},
          {"left_turn_carry_over", c.left_turn_carry_over},
          {"dsd_bin_width", c.dsd_bin_width},
          {"write_trajectory", c.write_trajectory},
          {"parallelism", c.parallelism},
          {"output_dir", c.output_dir},
          {"twin", std::move(twin)}};
}

RunConfig load_config(const std::filesystem::path& path) {
  return config_from_json(read_json_file(path), path.parent_path());
}

void validate(const RunConfig& c) {
  try {
    validate(c.clock);
    validate(c.twin.twin);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  if (c.algorithms.empty()) throw ConfigError("at least one algorithm is required");
  if (!c.grid && c.network_file.empty()) throw ConfigError("network needs a grid or a file");
  if (c.scenario.kind == ScenarioKind::Ladder && (c.scenario.id < 1 || c.scenario.id > 11)) {
    throw ConfigError(fmt::format("scenario id must be in 1..11, got {}", c.scenario.id));
  }
  if (!(c.scenario.base_vph >= 0.0) || !(c.scenario.ladder_factor >= 0.0) || !(c.scenario.scale >= 0.0)) {
    throw ConfigError("scenario rates must be non-negative");
  }
  if (c.scenario.kind == ScenarioKind::File && c.scenario.file.empty()) throw ConfigError("scenario file missing");
  if (!(c.dsd_bin_width > 0.0)) throw ConfigError("dsd_bin_width must be positive");
  if (!(c.fixed_split > c.signal.yellow + c.signal.all_red)) {
    throw ConfigError("fixed_split must exceed yellow plus all-red");
  }
  const auto& s = c.signal;
  if (!(s.yellow > 0.0) || !(s.all_red > 0.0) || !(s.min_green >= 0.0) || !(s.decision_period > 0.0)) {
    throw ConfigError("signal timings must be positive");
  }
  const auto& v = c.vehicle;
  if (!(v.length > 0.0) || !(v.max_accel > 0.0) || !(v.max_decel > 0.0) || !(v.min_gap >= 0.0)) {
    throw ConfigError("vehicle parameters must be positive");
  }
}

Network build_network(const RunConfig& config) {
  try {
    if (config.grid) return build_grid(*config.grid);
    return network_from_json(read_json_file(config.network_file));
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

DemandScenario build_scenario(const Network& net, const ScenarioSpec& spec) {
  try {
    DemandScenario s;
    switch (spec.kind) {
      case ScenarioKind::Ladder: {
        const auto ods = default_od_pairs(net);
        s = scenario_catalog(ods, spec.base_vph, spec.ladder_factor).at(static_cast<std::size_t>(spec.id - 1));
        break;
      }
      case ScenarioKind::Asymmetric: s = asymmetric_scenario(net, spec.asymmetric); break;
      case ScenarioKind::File: s = scenario_from_json(net, read_json_file(spec.file)); break;
    }
    for (auto& f : s.flows) f.vph *= spec.scale;
    return s;
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  } catch (const UnknownId& e) {
    throw ConfigError(e.what());
  } catch (const NoPath& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace twinsig
