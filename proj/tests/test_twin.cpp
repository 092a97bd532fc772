#include "twinsig/error.hpp"
#include "twinsig/rng.hpp"
#include "twinsig/twin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

using namespace twinsig;

namespace {

Network grid3() { return build_grid({3, 3, 500.0, 2, 80.0, 13.89}); }

std::vector<SimulationJob> six_jobs(const Network& net) {
  auto cat = scenario_catalog(default_od_pairs(net), 60.0, 0.3);
  std::vector<SimulationJob> jobs;
  for (int c = 0; c < 2; ++c) {
    for (auto a : kAllAlgorithms) {
      SimulationJob j;
      j.id = static_cast<std::uint32_t>(jobs.size());
      j.demand = cat[static_cast<std::size_t>(c * 5)];
      j.algorithm = a;
      j.seed = stream_seed(9, "job" + std::to_string(c));
      j.candidate = c;
      jobs.push_back(j);
    }
  }
  return jobs;
}

SimulationOptions live_options(double horizon) {
  SimulationOptions o;
  o.clock = {0.0, 1.0, horizon, 300.0, 0.0};
  o.record_signals = true;
  return o;
}

// Decision points of the subject controller reconstructed from its log. A
// row shows the display after that step's decision, so the state the
// decision saw is the previous row advanced by one step.
std::vector<double> decision_points(const Network& net, const std::vector<SignalLogRow>& log, double dt) {
  std::vector<double> out;
  const SignalLogRow* prev = nullptr;
  for (const auto& r : log) {
    if (r.intersection != net.subject_intersection()) continue;
    if (prev && prev->stage == Stage::Green && prev->green_elapsed + dt > 5.0 && std::fmod(r.t, 5.0) == 0.0) {
      out.push_back(r.t);
    }
    prev = &r;
  }
  return out;
}

}  // namespace

TEST_CASE("forecast_demands") {
  DemandEstimate e{300.0, {100.0, 200.0}};
  const std::vector<double> one{1.0};
  CHECK_EQ(forecast_demands(e, one), std::vector<std::vector<double>>{{100.0, 200.0}});
  const std::vector<double> two{0.5, 2.0};
  CHECK_EQ(forecast_demands(e, two), std::vector<std::vector<double>>{{50.0, 100.0}, {200.0, 400.0}});
  DemandEstimate zero{300.0, {0.0, 0.0, 0.0}};
  const std::vector<double> defaults{0.8, 1.0, 1.2};
  for (const auto& c : forecast_demands(zero, defaults)) CHECK_EQ(c, std::vector<double>{0.0, 0.0, 0.0});
  CHECK_THROWS_AS(forecast_demands(e, {}), InvalidArgument);
  const std::vector<double> bad{1.0, 0.0};
  CHECK_THROWS_AS(forecast_demands(e, bad), InvalidArgument);
}

TEST_CASE("estimate_demand") {
  std::vector<ScheduledDeparture> deps;
  for (int k = 0; k < 30; ++k) deps.push_back({static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k % 2), 10.0 * k, 0.0, {}});
  // [0, 300): flows 0 and 1 each have 15 departures
  auto e = estimate_demand(deps, 3, 300.0, 300.0);
  CHECK_EQ(e.vph, std::vector<double>{180.0, 180.0, 0.0});
  // clipped window [0, 100)
  auto early = estimate_demand(deps, 2, 100.0, 300.0);
  CHECK_EQ(early.window_length, 100.0);
  CHECK_EQ(early.vph, std::vector<double>{180.0, 180.0});
}

TEST_CASE("match_demand") {
  const std::vector<double> m{100.0, 200.0};
  CHECK_EQ(match_demand(m, {{0.0, 0.0}, {50.0, 50.0}, {100.0, 200.0}}), 2);
  CHECK_EQ(match_demand(m, {{90.0, 200.0}, {110.0, 200.0}}), 0);
  CHECK_THROWS_AS(match_demand(m, {}), InvalidArgument);
  CHECK_THROWS_AS(match_demand(m, {{1.0}}), InvalidArgument);

  SUBCASE("brute-force distance scan") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> vph(0.0, 600.0);
    std::uniform_int_distribution<int> count(1, 6);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> measured(10);
      for (auto& x : measured) x = vph(rng);
      std::vector<std::vector<double>> cands(static_cast<std::size_t>(count(rng)), std::vector<double>(10));
      for (auto& c : cands) {
        for (auto& x : c) x = vph(rng);
      }
      if (trial % 4 == 0 && cands.size() > 1) cands.back() = cands.front();
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < cands.size(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < 10; ++j) s += (measured[j] - cands[i][j]) * (measured[j] - cands[i][j]);
        if (s < best_d) {
          best_d = s;
          best = i;
        }
      }
      CHECK_EQ(match_demand(measured, cands), best);
    }
  }
}

TEST_CASE("select_controller") {
  std::vector<ScoredResult> s{{0, Algorithm::Baseline, 30.0, LosGrade::C},
                              {1, Algorithm::DT1, 25.0, LosGrade::C},
                              {2, Algorithm::DT2, 28.0, LosGrade::C}};
  CHECK_EQ(select_controller(s).chosen, Algorithm::DT1);
  CHECK_EQ(select_controller(std::span(s).subspan(2, 1)).chosen, Algorithm::DT2);
  s[0].mean_control_delay = 25.0;
  CHECK_EQ(select_controller(s).chosen, Algorithm::Baseline);
  // tie order does not depend on list order
  std::vector<ScoredResult> rev{s[2], s[1], s[0]};
  CHECK_EQ(select_controller(rev).chosen, Algorithm::Baseline);
  CHECK_EQ(select_controller(s, 2).matched_demand, 2);
  CHECK_THROWS_AS(select_controller({}), InvalidArgument);
}

TEST_CASE("run_parallel") {
  auto net = grid3();
  CHECK(run_parallel(net, {}, 4).empty());

  auto jobs = six_jobs(net);
  auto serial = run_parallel(net, jobs, 1);
  auto wide = run_parallel(net, jobs, 8);
  REQUIRE_EQ(serial.size(), 6);
  CHECK_EQ(results_json(serial).dump(), results_json(wide).dump());
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    CHECK_EQ(serial[i].job_id, jobs[i].id);
    REQUIRE(serial[i].ok);
    auto again = run_job(net, jobs[i]);
    CHECK_EQ(again.summary.control.mean, serial[i].summary.control.mean);
  }
  // more demand, more delay
  CHECK(serial[3].summary.control.count > serial[0].summary.control.count);

  SUBCASE("a failing job only fills its own slot") {
    auto broken = jobs;
    broken[2].clock.dt = 0.0;
    auto r = run_parallel(net, broken, 3);
    CHECK_FALSE(r[2].ok);
    CHECK_FALSE(r[2].error.empty());
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i != 2) CHECK_EQ(r[i].summary.control.mean, serial[i].summary.control.mean);
    }
  }
}

TEST_CASE("live loop with constant demand") {
  auto net = grid3();
  auto sc = scenario_catalog(default_od_pairs(net), 60.0, 0.3)[2];
  auto live = constant_demand(net, sc, 1800.0, 5, DepartureMode::Poisson);
  TwinConfig cfg;
  cfg.factors = {1.0};
  auto log = live_loop(net, live, live_options(1800.0), cfg, 5);
  REQUIRE_EQ(log.periods.size(), 5);
  CHECK_EQ(log.jobs.size(), 15);
  for (const auto& p : log.periods) {
    REQUIRE(p.selection);
    CHECK_EQ(p.selection->matched_demand, 0);
    CHECK_EQ(p.selection->scored.size(), 3);
  }
  // swaps follow the sequence of selections
  Algorithm running = cfg.initial;
  std::size_t expected = 0;
  for (const auto& p : log.periods) {
    if (p.selection->chosen != running) ++expected;
    running = p.selection->chosen;
  }
  CHECK_EQ(log.swaps.size(), expected);
  bool stable = true;
  for (const auto& p : log.periods) stable = stable && p.selection->chosen == log.periods.front().selection->chosen;
  if (stable) CHECK_EQ(log.swaps.size(), log.periods.front().selection->chosen == cfg.initial ? 0u : 1u);

  SUBCASE("reproducible") {
    auto again = live_loop(net, live, live_options(1800.0), cfg, 5);
    CHECK_EQ(manifest_json(net, again).dump(), manifest_json(net, log).dump());
  }
}

TEST_CASE("live loop across a demand step") {
  auto net = grid3();
  auto cat = scenario_catalog(default_od_pairs(net), 60.0, 0.3);
  auto live = step_change_demand(net, cat[0], cat[9], 900.0, 1800.0, 11, DepartureMode::Poisson);
  auto fewer = cat[9];
  fewer.flows.pop_back();
  CHECK_THROWS_AS(step_change_demand(net, cat[0], fewer, 900.0, 1800.0, 11, DepartureMode::Poisson), InvalidArgument);
  CHECK_THROWS_AS(step_change_demand(net, cat[0], cat[9], 1800.0, 1800.0, 11, DepartureMode::Poisson),
                  InvalidArgument);
  TwinConfig cfg;
  auto log = live_loop(net, live, live_options(1800.0), cfg, 11);
  REQUIRE_EQ(log.periods.size(), 5);
  CHECK_EQ(log.jobs.size(), 45);

  const auto points = decision_points(net, log.live_signal_log, 1.0);
  for (const auto& s : log.swaps) {
    // the swap lands on the first decision point after the latest boundary
    const TwinPeriod* boundary = nullptr;
    for (const auto& p : log.periods) {
      if (p.t <= s.t) boundary = &p;
    }
    REQUIRE(boundary != nullptr);
    REQUIRE(boundary->selection);
    CHECK_EQ(s.to, boundary->selection->chosen);
    double first = -1.0;
    for (double t : points) {
      if (t >= boundary->t) {
        first = t;
        break;
      }
    }
    CHECK_EQ(s.t, first);
    CHECK_EQ(s.stage, Stage::Green);
    CHECK(s.green_elapsed > 5.0);
  }
  for (const auto& p : log.periods) {
    REQUIRE(p.selection);
    for (const auto& r : p.selection->scored) {
      const auto chosen = std::find_if(p.selection->scored.begin(), p.selection->scored.end(),
                                       [&](const ScoredResult& x) { return x.algorithm == p.selection->chosen; });
      CHECK(chosen->mean_control_delay <= r.mean_control_delay);
    }
  }
  // demand after the step is visibly higher in the estimate
  CHECK(log.periods.back().forecast_estimate.vph.front() > log.periods.front().forecast_estimate.vph.front());
}

TEST_CASE("manifest") {
  auto net = grid3();
  auto sc = scenario_catalog(default_od_pairs(net), 60.0, 0.3)[0];
  auto live = constant_demand(net, sc, 900.0, 3, DepartureMode::Poisson);
  TwinConfig cfg;
  cfg.factors = {1.0};
  cfg.period = 450.0;
  auto log = live_loop(net, live, live_options(900.0), cfg, 3);
  auto doc = manifest_json(net, log);
  REQUIRE(doc.contains("dimensions"));
  CHECK_EQ(doc["dimensions"].size(), 9);
  for (const auto& sym : TwinDimensions::symbols()) {
    REQUIRE(doc["dimensions"].contains(sym));
    CHECK_FALSE(doc["dimensions"][sym].get<std::string>().empty());
  }
  CHECK(TwinDimensions::defaults().complete());
  CHECK_EQ(doc["jobs"].size(), 3);
  CHECK_EQ(doc["jobs"][0]["seed"].get<std::string>().size(), 16);
  CHECK_EQ(doc["periods"][0]["status"], "ok");

  SUBCASE("config validation") {
    TwinConfig bad;
    bad.period = 0.0;
    CHECK_THROWS_AS(validate(bad), InvalidArgument);
    bad = {};
    bad.factors = {};
    CHECK_THROWS_AS(validate(bad), InvalidArgument);
  }
}
