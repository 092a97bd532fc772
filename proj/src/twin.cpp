#include "twinsig/twin.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include <fmt/format.h>

#include "twinsig/error.hpp"
#include "twinsig/rng.hpp"

namespace twinsig {

const std::vector<std::string>& TwinDimensions::symbols() {
  static const std::vector<std::string> kSymbols{"PE", "DS", "DD", "MO", "SI", "TP", "CA", "AP", "CG"};
  return kSymbols;
}

TwinDimensions TwinDimensions::defaults() {
  TwinDimensions d;
  d.entries = {
      {"PE", "live Simulation (src/simulation.cpp): vehicles, lanes and signals of the physical run"},
      {"DS", "observe_subject / IntersectionObservation (src/simulation.cpp): per-approach vehicle ledgers"},
      {"DD", "DelayLedger, departure schedule and traversal log (src/delay.cpp, src/simulation.cpp)"},
      {"MO", "Network, car-following and phase table models (src/network.cpp, src/simulation.cpp, src/signal.cpp)"},
      {"SI", "run_parallel twin jobs (src/twin.cpp)"},
      {"TP", "estimate_demand + forecast_demands scaling forecast (src/twin.cpp)"},
      {"CA", "baseline / dt1 / dt2 decision rules (src/controllers.cpp)"},
      {"AP", "select_controller + request_algorithm swap (src/twin.cpp, src/simulation.cpp)"},
      {"CG", "in-process calls between live run and twin; manifest and CSV artifacts (src/cli.cpp)"},
  };
  return d;
}

bool TwinDimensions::complete() const {
  return std::all_of(symbols().begin(), symbols().end(), [&](const std::string& s) {
    auto it = entries.find(s);
    return it != entries.end() && !it->second.empty();
  });
}

nlohmann::json TwinDimensions::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& s : symbols()) {
    auto it = entries.find(s);
    j[s] = it == entries.end() ? std::string{} : it->second;
  }
  return j;
}

DemandEstimate estimate_demand(std::span<const ScheduledDeparture> departures, std::size_t flow_count, double t,
                               double window) {
  if (!(window > 0.0)) throw InvalidArgument("estimation window must be positive");
  const double start = std::max(0.0, t - window);
  DemandEstimate est;
  est.window_length = t - start;
  est.vph.assign(flow_count, 0.0);
  if (!(est.window_length > 0.0)) {
    est.window_length = window;
    return est;
  }
  std::vector<std::size_t> counts(flow_count, 0);
  for (const auto& d : departures) {
    if (d.depart_time < start || d.depart_time >= t) continue;
    if (d.flow_index >= flow_count) throw InvalidArgument("departure references an unknown flow");
    ++counts[d.flow_index];
  }
  for (std::size_t i = 0; i < flow_count; ++i) {
    est.vph[i] = static_cast<double>(counts[i]) * 3600.0 / est.window_length;
  }
  return est;
}

std::vector<std::vector<double>> forecast_demands(const DemandEstimate& estimate, std::span<const double> factors) {
  if (factors.empty()) throw InvalidArgument("forecast needs at least one factor");
  std::vector<std::vector<double>> out;
  for (double f : factors) {
    if (!(f > 0.0)) throw InvalidArgument(fmt::format("forecast factor must be positive, got {}", f));
    auto& c = out.emplace_back(estimate.vph);
    for (auto& v : c) v *= f;
  }
  return out;
}

SimulationResult run_job(const Network& net, const SimulationJob& job) {
  SimulationResult r;
  r.job_id = job.id;
  try {
    auto deps = schedule_departures(net, job.demand, job.clock.horizon, job.seed, job.mode);
    SimulationOptions opts;
    opts.clock = job.clock;
    opts.vehicle = job.vehicle;
    opts.timing = job.timing;
    opts.algorithm = job.algorithm;
    Simulation sim(net, std::move(deps), opts);
    sim.run();
    r.summary = summarize(sim);
    r.ok = true;
  } catch (const std::exception& e) {
    r.ok = false;
    r.error = e.what();
  }
  return r;
}

std::vector<SimulationResult> run_parallel(const Network& net, std::span<const SimulationJob> jobs,
                                           unsigned parallelism) {
  std::vector<SimulationResult> results(jobs.size());
  if (jobs.empty()) return results;
  unsigned workers = parallelism == 0 ? std::max(1u, std::thread::hardware_concurrency()) : parallelism;
  workers = std::min<unsigned>(workers, static_cast<unsigned>(jobs.size()));

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1)) results[i] = run_job(net, jobs[i]);
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  std::sort(results.begin(), results.end(), [](const auto& a, const auto& b) { return a.job_id < b.job_id; });
  return results;
}

nlohmann::json results_json(std::span<const SimulationResult> results) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : results) {
    nlohmann::json j{{"job_id", r.job_id}, {"ok", r.ok}};
    if (r.ok) {
      j["algorithm"] = r.summary.algorithm;
      j["mean_control_delay"] = r.summary.control.mean;
      j["los"] = std::string(1, to_char(r.summary.control.los.grade));
      j["traversals"] = r.summary.control.count;
      nlohmann::json aasd_j = nlohmann::json::object();
      for (auto m : kAllMovements) aasd_j[std::string(to_string(m))] = r.summary.movements[index_of(m)].aasd;
      j["aasd"] = std::move(aasd_j);
    } else {
      j["error"] = r.error;
    }
    arr.push_back(std::move(j));
  }
  return arr;
}

std::size_t match_demand(std::span<const double> measured, const std::vector<std::vector<double>>& candidates) {
  if (candidates.empty()) throw InvalidArgument("match_demand needs at least one candidate");
  std::size_t best = 0;
  double best_d2 = 0.0;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    if (candidates[c].size() != measured.size()) {
      throw InvalidArgument(fmt::format("candidate {} has {} flows, measured has {}", c, candidates[c].size(),
                                        measured.size()));
    }
    double d2 = 0.0;
    for (std::size_t i = 0; i < measured.size(); ++i) {
      const double diff = measured[i] - candidates[c][i];
      d2 += diff * diff;
    }
    if (c == 0 || d2 < best_d2) {
      best = c;
      best_d2 = d2;
    }
  }
  return best;
}

TwinSelection select_controller(std::span<const ScoredResult> scored, std::size_t matched_demand) {
  if (scored.empty()) throw InvalidArgument("select_controller needs at least one scored result");
  TwinSelection sel;
  sel.scored.assign(scored.begin(), scored.end());
  sel.matched_demand = matched_demand;
  const ScoredResult* best = &scored.front();
  for (const auto& s : scored) {
    if (s.mean_control_delay < best->mean_control_delay ||
        (s.mean_control_delay == best->mean_control_delay && s.algorithm < best->algorithm)) {
      best = &s;
    }
  }
  sel.chosen = best->algorithm;
  return sel;
}

void validate(const TwinConfig& c) {
  if (!(c.period > 0.0)) throw InvalidArgument("twin period must be positive");
  if (c.factors.empty()) throw InvalidArgument("twin factors must not be empty");
  for (double f : c.factors) {
    if (!(f > 0.0)) throw InvalidArgument("twin factors must be positive");
  }
  if (!(c.forecast_window > 0.0) || !(c.match_window > 0.0)) throw InvalidArgument("twin windows must be positive");
  validate(SimClock{0.0, 1.0, c.job_horizon, c.job_warmup, c.job_cooldown});
}

namespace {

void renumber(std::vector<ScheduledDeparture>& deps) {
  std::stable_sort(deps.begin(), deps.end(), [](const auto& a, const auto& b) {
    if (a.depart_time != b.depart_time) return a.depart_time < b.depart_time;
    return a.flow_index < b.flow_index;
  });
  for (std::size_t k = 0; k < deps.size(); ++k) deps[k].vehicle_id = static_cast<std::uint32_t>(k);
}

}  // namespace

LiveDemand constant_demand(const Network& net, const DemandScenario& scenario, double horizon, std::uint64_t root_seed,
                           DepartureMode mode) {
  return {scenario.flows, schedule_departures(net, scenario, horizon, root_seed, mode)};
}

LiveDemand step_change_demand(const Network& net, const DemandScenario& before, const DemandScenario& after,
                              double t_change, double horizon, std::uint64_t root_seed, DepartureMode mode) {
  if (before.flows.size() != after.flows.size()) throw InvalidArgument("step-change scenarios must share flows");
  for (std::size_t i = 0; i < before.flows.size(); ++i) {
    const auto& a = before.flows[i].od;
    const auto& b = after.flows[i].od;
    if (a.origin != b.origin || a.destination != b.destination || a.via != b.via) {
      throw InvalidArgument(fmt::format("step-change flow {} has a different OD pair", i));
    }
  }
  if (!(t_change > 0.0) || !(t_change < horizon)) throw InvalidArgument("step change must fall inside the horizon");

  // The first part is the prefix of the stream a constant run would draw.
  auto deps = schedule_departures(net, before, t_change, root_seed, mode);
  auto tail = schedule_departures(net, after, horizon - t_change, stream_seed(root_seed, "step-change"), mode);
  for (auto& d : tail) {
    d.depart_time += t_change;
    deps.push_back(std::move(d));
  }
  renumber(deps);
  return {before.flows, std::move(deps)};
}

TwinRunLog live_loop(const Network& net, const LiveDemand& demand, const SimulationOptions& live_options,
                     const TwinConfig& config, std::uint64_t root_seed) {
  validate(config);
  TwinRunLog log;
  log.dimensions = TwinDimensions::defaults();
  log.root_seed = root_seed;
  log.config = config;

  SimulationOptions opts = live_options;
  opts.algorithm = config.initial;
  Simulation live(net, demand.departures, opts);
  const double horizon = live.clock().horizon;
  const auto flow_count = demand.flows.size();

  std::uint32_t next_job = 0;
  for (int k = 1; static_cast<double>(k) * config.period < horizon - 1e-9; ++k) {
    const double t = static_cast<double>(k) * config.period;
    live.run_until(t);

    TwinPeriod period;
    period.index = k;
    period.t = t;
    period.active = live.pending_algorithm().value_or(live.algorithm());
    // Only what has already departed is observable.
    const auto seen = live.departures();
    period.forecast_estimate = estimate_demand(seen, flow_count, t, config.forecast_window);
    period.candidates = forecast_demands(period.forecast_estimate, config.factors);

    std::vector<SimulationJob> jobs;
    for (std::size_t c = 0; c < period.candidates.size(); ++c) {
      DemandScenario scenario;
      scenario.scenario_id = 0;
      scenario.flows = demand.flows;
      for (std::size_t i = 0; i < flow_count; ++i) scenario.flows[i].vph = period.candidates[c][i];
      const auto seed = stream_seed(root_seed, fmt::format("twin:p{}:c{}", k, c));
      for (auto a : kAllAlgorithms) {
        SimulationJob job;
        job.id = next_job++;
        job.demand = scenario;
        job.algorithm = a;
        job.seed = seed;
        job.clock = SimClock{0.0, opts.clock.dt, config.job_horizon, config.job_warmup, config.job_cooldown};
        job.vehicle = opts.vehicle;
        job.timing = opts.timing;
        job.period = k;
        job.candidate = static_cast<int>(c);
        period.job_ids.push_back(job.id);
        jobs.push_back(std::move(job));
      }
    }
    auto results = run_parallel(net, jobs, config.parallelism);
    for (const auto& r : results) {
      if (!r.ok) period.errors.push_back(fmt::format("job {}: {}", r.job_id, r.error));
    }
    period.degraded = !period.errors.empty();

    if (!period.degraded) {
      period.match_estimate = estimate_demand(seen, flow_count, t, config.match_window);
      const auto matched = match_demand(period.match_estimate.vph, period.candidates);
      std::vector<ScoredResult> scored;
      for (std::size_t j = 0; j < jobs.size(); ++j) {
        if (jobs[j].candidate != static_cast<int>(matched)) continue;
        const auto& s = results[j].summary;
        scored.push_back({jobs[j].id, jobs[j].algorithm, s.control.mean, s.control.los.grade});
      }
      period.selection = select_controller(scored, matched);
      live.request_algorithm(period.selection->chosen);
    }

    log.jobs.insert(log.jobs.end(), std::make_move_iterator(jobs.begin()), std::make_move_iterator(jobs.end()));
    log.results.insert(log.results.end(), results.begin(), results.end());
    log.periods.push_back(std::move(period));
  }
  live.run();

  log.swaps = live.swaps();
  log.live_summary = summarize(live);
  log.live_traversals = live.traversals();
  log.live_signal_log = live.signal_log();
  return log;
}

namespace {

nlohmann::json estimate_json(const DemandEstimate& e) {
  return {{"window_length", e.window_length}, {"vph", e.vph}};
}

std::string seed_hex(std::uint64_t seed) { return fmt::format("{:016x}", seed); }

}  // namespace

nlohmann::json manifest_json(const Network& net, const TwinRunLog& log) {
  using nlohmann::json;
  json jobs = json::array();
  for (const auto& j : log.jobs) {
    std::vector<double> vph;
    for (const auto& f : j.demand.flows) vph.push_back(f.vph);
    jobs.push_back({{"job_id", j.id},
                    {"period", j.period},
                    {"candidate", j.candidate},
                    {"algorithm", std::string(to_string(j.algorithm))},
                    {"seed", seed_hex(j.seed)},
                    {"horizon", j.clock.horizon},
                    {"warmup", j.clock.warmup},
                    {"cooldown", j.clock.cooldown},
                    {"vph", std::move(vph)}});
  }
  json periods = json::array();
  for (const auto& p : log.periods) {
    json pj{{"index", p.index},
            {"t", p.t},
            {"active", std::string(to_string(p.active))},
            {"forecast_estimate", estimate_json(p.forecast_estimate)},
            {"candidates", p.candidates},
            {"job_ids", p.job_ids},
            {"status", p.degraded ? "degraded" : "ok"},
            {"errors", p.errors}};
    if (p.selection) {
      json scored = json::array();
      for (const auto& s : p.selection->scored) {
        scored.push_back({{"job_id", s.job_id},
                          {"algorithm", std::string(to_string(s.algorithm))},
                          {"mean_control_delay", s.mean_control_delay},
                          {"los", std::string(1, to_char(s.los))}});
      }
      pj["match_estimate"] = estimate_json(p.match_estimate);
      pj["matched_demand"] = p.selection->matched_demand;
      pj["chosen_algorithm"] = std::string(to_string(p.selection->chosen));
      pj["scores"] = std::move(scored);
    } else {
      pj["matched_demand"] = nullptr;
      pj["chosen_algorithm"] = nullptr;
    }
    periods.push_back(std::move(pj));
  }
  json swaps = json::array();
  for (const auto& s : log.swaps) {
    swaps.push_back({{"t", s.t},
                     {"from", std::string(to_string(s.from))},
                     {"to", std::string(to_string(s.to))},
                     {"stage", std::string(to_string(s.stage))},
                     {"green_elapsed", s.green_elapsed}});
  }
  const auto& c = log.config;
  return {{"dimensions", log.dimensions.to_json()},
          {"root_seed", log.root_seed},
          {"subject_intersection", net.node(net.subject_intersection()).name},
          {"config",
           {{"period", c.period},
            {"factors", c.factors},
            {"forecast_window", c.forecast_window},
            {"match_window", c.match_window},
            {"job_horizon", c.job_horizon},
            {"job_warmup", c.job_warmup},
            {"job_cooldown", c.job_cooldown},
            {"initial", std::string(to_string(c.initial))}}},
          {"jobs", std::move(jobs)},
          {"results", results_json(log.results)},
          {"periods", std::move(periods)},
          {"swaps", std::move(swaps)},
          {"live", summary_to_json(log.live_summary)}};
}

}  // namespace twinsig
