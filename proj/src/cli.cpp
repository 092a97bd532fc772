#include "twinsig/cli.hpp"

#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "twinsig/error.hpp"

namespace twinsig {

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error(fmt::format("write to '{}' failed", path.string()));
}

void write_json(const fs::path& path, const nlohmann::json& doc) { write_file(path, doc.dump(2) + "\n"); }

std::string departures_csv(const Network& net, std::span<const ScheduledDeparture> deps) {
  std::string out = "vehicle_id,flow,depart_time,depart_speed,origin,destination,route_length\n";
  for (const auto& d : deps) {
    out += fmt::format("{},{},{},{},{},{},{}\n", d.vehicle_id, d.flow_index, d.depart_time, d.depart_speed,
                       net.segment(d.route.front()).name, net.segment(d.route.back()).name, d.route.size());
  }
  return out;
}

std::string signal_csv(const Network& net, std::span<const SignalLogRow> rows) {
  std::string out = "t,intersection,phase,stage,green_elapsed,status,lights\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{}\n", r.t, net.node(r.intersection).name, r.phase.index(), to_string(r.stage),
                       r.green_elapsed, r.status == SignalStatus::Ok ? "ok" : "out_of_order", r.lights);
  }
  return out;
}

std::string traversals_csv(const Network& net, std::span<const TraversalRecord> rows) {
  std::string out = "vehicle_id,segment,movement,t_in,t_out,stopped_delay,carried_over,segment_delay,subject\n";
  const auto subject = net.subject_intersection();
  for (const auto& r : rows) {
    const auto& seg = net.segment(r.segment);
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", r.vehicle_id, seg.name, to_string(r.movement), r.t_in, r.t_out,
                       r.stopped_delay, r.carried_over, r.segment_delay, seg.to == subject ? 1 : 0);
  }
  return out;
}

std::string decisions_csv(std::span<const DecisionRecord> rows) {
  std::string out = "t,algorithm";
  for (auto m : kAllMovements) out += fmt::format(",{}", to_string(m));
  out += ",proposed_phase,winning_movement,winning_value\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{}", r.t, to_string(r.algorithm));
    for (double v : r.input.values) out += fmt::format(",{}", v);
    const auto& d = r.decision;
    out += fmt::format(",{},{},{}\n", d.proposed_phase ? fmt::format("{}", d.proposed_phase->index()) : "out_of_order",
                       to_string(d.winning_movement), d.winning_value);
  }
  return out;
}

std::string swaps_csv(std::span<const SwapEvent> rows) {
  std::string out = "t,from,to,stage,green_elapsed\n";
  for (const auto& s : rows) {
    out += fmt::format("{},{},{},{},{}\n", s.t, to_string(s.from), to_string(s.to), to_string(s.stage), s.green_elapsed);
  }
  return out;
}

void write_dsd_files(const fs::path& dir, const ComparisonReport& report) {
  for (auto m : kAllMovements) write_file(dir / fmt::format("dsd_{}.csv", to_string(m)), dsd_csv(report, m));
}

/// Streams trajectory rows to disk in fixed-size chunks.
class TrajectoryWriter {
 public:
  TrajectoryWriter(const fs::path& path, const Network& net) : net_(net), out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
    fmt::format_to(std::back_inserter(buf_), "t,vehicle_id,segment,position,speed,waiting,accumulated\n");
  }
  ~TrajectoryWriter() { flush(); }

  void operator()(const TrajectoryRow& r) {
    fmt::format_to(std::back_inserter(buf_), "{},{},{},{},{},{},{}\n", r.t, r.vehicle_id, net_.segment(r.segment).name,
                   r.position, r.speed, r.waiting, r.accumulated);
    if (buf_.size() > (1u << 20)) flush();
  }

  void flush() {
    out_.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    buf_.clear();
  }

 private:
  const Network& net_;
  std::ofstream out_;
  fmt::memory_buffer buf_;
};

SimulationOptions options_for(const RunConfig& c, Algorithm algorithm) {
  SimulationOptions o;
  o.clock = c.clock;
  o.vehicle = c.vehicle;
  o.timing = c.signal;
  o.fixed_split = c.fixed_split;
  o.algorithm = algorithm;
  o.left_turn_carry_over = c.left_turn_carry_over;
  o.record_signals = true;
  return o;
}

nlohmann::json summary_doc(const RunConfig& c, const DemandScenario& scenario, const SimulationSummary& s) {
  auto doc = summary_to_json(s);
  doc["seed"] = c.seed;
  doc["scenario_id"] = scenario.scenario_id;
  doc["demand_class"] = std::string(to_string(scenario.demand_class));
  return doc;
}

}  // namespace

SimulationSummary cmd_simulate(const RunConfig& config, Algorithm algorithm, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  RunConfig own = config;
  own.algorithms = {algorithm};
  own.output_dir = out_dir.string();
  write_json(out_dir / "config.json", config_to_json(own));

  const Network net = build_network(config);
  const DemandScenario scenario = build_scenario(net, config.scenario);
  auto deps = schedule_departures(net, scenario, config.clock.horizon, config.seed, config.departure_mode);
  write_file(out_dir / "departures.csv", departures_csv(net, deps));

  auto opts = options_for(config, algorithm);
  std::optional<TrajectoryWriter> traj;
  if (config.write_trajectory) {
    traj.emplace(out_dir / "trajectory.csv", net);
    opts.trajectory_sink = [&traj](const TrajectoryRow& r) { (*traj)(r); };
  }
  Simulation sim(net, std::move(deps), opts);
  sim.run();
  if (traj) traj->flush();

  const auto summary = summarize(sim);
  write_file(out_dir / "signal.csv", signal_csv(net, sim.signal_log()));
  write_file(out_dir / "traversals.csv", traversals_csv(net, sim.traversals()));
  write_file(out_dir / "decisions.csv", decisions_csv(sim.decisions()));
  write_json(out_dir / "summary.json", summary_doc(config, scenario, summary));
  ComparisonReport single;
  single.bin_width = config.dsd_bin_width;
  single.algorithms.push_back(algorithm_report(summary, config.dsd_bin_width));
  write_dsd_files(out_dir, single);
  return summary;
}

ComparisonReport cmd_compare(const RunConfig& config, const fs::path& out_dir) {
  if (config.algorithms.size() < 2) throw InvalidArgument("compare needs at least two algorithms");
  if (std::find(config.algorithms.begin(), config.algorithms.end(), Algorithm::Baseline) == config.algorithms.end()) {
    throw InvalidArgument("compare requires the baseline algorithm");
  }
  fs::create_directories(out_dir);
  RunConfig own = config;
  own.output_dir = out_dir.string();
  write_json(out_dir / "config.json", config_to_json(own));
  std::map<std::string, SimulationSummary> results;
  for (auto a : config.algorithms) {
    const std::string name(to_string(a));
    results[name] = cmd_simulate(config, a, out_dir / name);
  }
  auto report = compare(results, config.dsd_bin_width);
  write_file(out_dir / "comparison.csv", comparison_csv(report));
  write_json(out_dir / "comparison.json", comparison_json(report));
  write_dsd_files(out_dir, report);
  return report;
}

TwinRunLog cmd_twin(const RunConfig& config, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  RunConfig own = config;
  own.output_dir = out_dir.string();
  write_json(out_dir / "config.json", config_to_json(own));

  const Network net = build_network(config);
  const DemandScenario scenario = build_scenario(net, config.scenario);
  LiveDemand live;
  if (config.twin.step_change) {
    const auto after = build_scenario(net, config.twin.step_change->scenario);
    live = step_change_demand(net, scenario, after, config.twin.step_change->t, config.clock.horizon, config.seed,
                              config.departure_mode);
  } else {
    live = constant_demand(net, scenario, config.clock.horizon, config.seed, config.departure_mode);
  }
  write_file(out_dir / "departures.csv", departures_csv(net, live.departures));

  auto opts = options_for(config, config.twin.twin.initial);
  auto twin_cfg = config.twin.twin;
  twin_cfg.parallelism = config.parallelism;
  auto log = live_loop(net, live, opts, twin_cfg, config.seed);

  for (const auto& p : log.periods) {
    for (const auto& e : p.errors) std::cerr << fmt::format("warning: period {} degraded: {}\n", p.index, e);
  }
  write_json(out_dir / "manifest.json", manifest_json(net, log));
  write_file(out_dir / "signal.csv", signal_csv(net, log.live_signal_log));
  write_file(out_dir / "traversals.csv", traversals_csv(net, log.live_traversals));
  write_file(out_dir / "swaps.csv", swaps_csv(log.swaps));
  write_json(out_dir / "summary.json", summary_doc(config, scenario, log.live_summary));
  return log;
}

ComparisonReport cmd_report(const fs::path& dir, double bin_width) {
  std::map<std::string, SimulationSummary> results;
  for (auto a : kAllAlgorithms) {
    const auto path = dir / std::string(to_string(a)) / "summary.json";
    if (!fs::exists(path)) continue;
    std::ifstream in(path);
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(fmt::format("'{}' is not valid JSON: {}", path.string(), e.what()));
    }
    results[std::string(to_string(a))] = summary_from_json(doc);
  }
  if (results.empty()) throw ConfigError(fmt::format("no run directories with summary.json under '{}'", dir.string()));
  auto report = compare(results, bin_width);
  write_file(dir / "comparison.csv", comparison_csv(report));
  write_json(dir / "comparison.json", comparison_json(report));
  write_dsd_files(dir, report);
  return report;
}

namespace {

struct CliArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string algorithms;
  std::optional<int> scenario;
  std::optional<unsigned> parallelism;
  std::string report_dir;
  double bin_width{10.0};
};

void add_common(CLI::App* cmd, CliArgs& a) {
  cmd->add_option("--config", a.config_path, "JSON run configuration");
  cmd->add_option("--seed", a.seed, "Root seed");
  cmd->add_option("--out", a.out, "Output directory");
  cmd->add_option("--algorithm", a.algorithms, "baseline, dt1, dt2 (comma separated)");
  cmd->add_option("--scenario", a.scenario, "Demand ladder scenario 1..11");
  cmd->add_option("--parallelism", a.parallelism, "Worker threads for twin jobs");
}

RunConfig resolve_config(const CliArgs& a) {
  RunConfig c;
  if (!a.config_path.empty()) c = load_config(a.config_path);
  if (a.seed) c.seed = *a.seed;
  if (!a.out.empty()) c.output_dir = a.out;
  if (!a.algorithms.empty()) {
    c.algorithms.clear();
    std::string_view rest = a.algorithms;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const auto token = rest.substr(0, comma);
      try {
        c.algorithms.push_back(parse_algorithm(token));
      } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
      }
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    }
  }
  if (a.scenario) {
    c.scenario.kind = ScenarioKind::Ladder;
    c.scenario.id = *a.scenario;
  }
  if (a.parallelism) c.parallelism = *a.parallelism;
  validate(c);
  return c;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Signal control simulator with a digital-twin controller selector"};
  app.require_subcommand(1);
  CliArgs args;
  auto* simulate = app.add_subcommand("simulate", "Run one algorithm and write its artifacts");
  auto* compare_cmd = app.add_subcommand("compare", "Run several algorithms on the same demand and compare");
  auto* twin = app.add_subcommand("twin", "Run the live simulation with periodic twin controller selection");
  auto* report = app.add_subcommand("report", "Rebuild comparison files from existing run directories");
  for (auto* cmd : {simulate, compare_cmd, twin}) add_common(cmd, args);
  report->add_option("dir", args.report_dir, "Directory holding <algorithm>/summary.json")->required();
  report->add_option("--bin-width", args.bin_width, "DSD bin width in seconds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  RunConfig config;
  try {
    if (!report->parsed()) config = resolve_config(args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }

  try {
    if (simulate->parsed()) {
      if (config.algorithms.size() != 1) {
        std::cerr << "config error: simulate takes exactly one algorithm\n";
        return kExitConfigError;
      }
      const auto s = cmd_simulate(config, config.algorithms.front(), config.output_dir);
      std::cout << fmt::format("{}: mean control delay {:.2f} s/veh, LOS {}, {} traversals\n", s.algorithm,
                               s.control.mean, to_char(s.control.los.grade), s.control.count);
    } else if (compare_cmd->parsed()) {
      const auto r = cmd_compare(config, config.output_dir);
      std::cout << comparison_csv(r);
    } else if (twin->parsed()) {
      const auto log = cmd_twin(config, config.output_dir);
      std::cout << fmt::format("{} periods, {} jobs, {} swaps; live mean control delay {:.2f} s/veh\n",
                               log.periods.size(), log.jobs.size(), log.swaps.size(), log.live_summary.control.mean);
    } else if (report->parsed()) {
      const auto r = cmd_report(args.report_dir, args.bin_width);
      std::cout << comparison_csv(r);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
  return kExitOk;
}

}  // namespace twinsig
