#include "twinsig/delay.hpp"
#include "twinsig/error.hpp"

#include <random>

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

using namespace twinsig;

namespace {

DelayLedger run(DelayLedger l, const std::vector<double>& speeds, double dt = 1.0) {
  for (double v : speeds) l = update_waiting(l, v, dt);
  return l;
}

// Counts below-threshold samples per approach straight from the trace.
struct Replay {
  std::vector<double> per_approach;
  double total{};
  double suffix{};
};

Replay replay(const std::vector<std::vector<double>>& approaches, double dt) {
  Replay r;
  for (const auto& trace : approaches) {
    int stopped = 0;
    for (double v : trace) {
      if (v < 0.1) {
        ++stopped;
        r.suffix += dt;
      } else {
        r.suffix = 0.0;
      }
    }
    r.per_approach.push_back(stopped * dt);
    r.total += stopped * dt;
  }
  return r;
}

}  // namespace

TEST_CASE("update_waiting") {
  SUBCASE("threshold rule") {
    DelayLedger l;
    l = update_waiting(l, 0.05, 1.0);
    CHECK_EQ(l.waiting, 1.0);
    CHECK_EQ(l.accumulated, 1.0);
    l = update_waiting(l, 0.05, 1.0);
    CHECK_EQ(l.waiting, 2.0);
    CHECK_EQ(l.accumulated, 2.0);
    l = update_waiting(l, 0.2, 1.0);
    CHECK_EQ(l.waiting, 0.0);
    CHECK_EQ(l.accumulated, 2.0);
  }
  SUBCASE("exactly 0.1 counts as moving") {
    auto l = update_waiting({}, 0.1, 1.0);
    CHECK_EQ(l.accumulated, 0.0);
  }
  SUBCASE("never below threshold") {
    auto l = run({}, {0.1, 3.0, 13.0, 0.5});
    CHECK_EQ(l.accumulated, 0.0);
    CHECK_EQ(l.waiting, 0.0);
  }
  SUBCASE("two spells sum") {
    auto l = run({}, {0, 0, 0, 5, 5, 0, 0});
    CHECK_EQ(l.accumulated, 5.0);
    CHECK_EQ(l.waiting, 2.0);
  }
}

TEST_CASE("vehicle delays") {
  DelayLedger l{0.0, 15.0, 6.0, 4.0};
  CHECK_EQ(vehicle_delay_dt1(l), 9.0);
  CHECK_EQ(vehicle_delay_dt2(l), 13.0);
  CHECK_EQ(vehicle_delay(l, DelayVariant::DT2), 13.0);
  CHECK_EQ(vehicle_delay_dt1({0.0, 6.0, 6.0, 0.0}), 0.0);
  DelayLedger no_carry{0.0, 15.0, 6.0, 0.0};
  CHECK_EQ(vehicle_delay_dt2(no_carry), vehicle_delay_dt1(no_carry));
  CHECK_THROWS_AS(vehicle_delay_dt1({0.0, 5.0, 6.0, 0.0}), LedgerCorruption);
}

TEST_CASE("on_approach_transition") {
  auto l = on_approach_transition({0.0, 20.0, 12.0, 1.0});
  CHECK_EQ(l.carried_over, 8.0);
  CHECK_EQ(l.entry_accumulated, 20.0);
  CHECK_EQ(l.accumulated, 20.0);
  CHECK_EQ(on_approach_transition({0.0, 12.0, 12.0, 5.0}).carried_over, 0.0);

  SUBCASE("two approaches with 7 s then 5 s") {
    DelayLedger v = run({}, {3, 0, 0, 0, 0, 0, 0, 0, 4});
    v = on_approach_transition(v);
    v = run(v, {2, 0, 0, 0, 0, 0, 6});
    CHECK_EQ(vehicle_delay_dt1(v), 5.0);
    CHECK_EQ(vehicle_delay_dt2(v), 12.0);
  }
  SUBCASE("three approaches with 3/0/4 s") {
    DelayLedger v = run({}, {0, 0, 0, 5});
    std::vector<double> carried{v.carried_over};
    v = on_approach_transition(v);
    carried.push_back(v.carried_over);
    v = run(v, {5, 5, 5});
    v = on_approach_transition(v);
    carried.push_back(v.carried_over);
    v = run(v, {0, 0, 0, 0});
    CHECK_EQ(carried, std::vector<double>{0.0, 3.0, 0.0});
    CHECK_EQ(vehicle_delay_dt1(v), 4.0);
    CHECK_EQ(vehicle_delay_dt2(v), 4.0);
  }
}

TEST_CASE("trace replay") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> speed(0.0, 0.3);
  std::uniform_int_distribution<int> len(0, 80);
  std::uniform_int_distribution<int> legs(1, 4);
  for (int trial = 0; trial < 500; ++trial) {
    const double dt = trial % 2 == 0 ? 1.0 : 0.5;
    std::vector<std::vector<double>> approaches(static_cast<std::size_t>(legs(rng)));
    for (auto& a : approaches) {
      a.resize(static_cast<std::size_t>(len(rng)));
      for (auto& v : a) v = speed(rng);
    }
    DelayLedger l;
    for (std::size_t i = 0; i < approaches.size(); ++i) {
      if (i > 0) l = on_approach_transition(l);
      l = run(l, approaches[i], dt);
    }
    const auto expect = replay(approaches, dt);
    CHECK_EQ(l.accumulated, expect.total);
    CHECK_EQ(l.waiting, expect.suffix);
    CHECK_EQ(vehicle_delay_dt1(l), expect.per_approach.back());
    const double carried = approaches.size() > 1 ? expect.per_approach[approaches.size() - 2] : 0.0;
    CHECK_EQ(l.carried_over, carried);
    CHECK_EQ(vehicle_delay_dt2(l), expect.per_approach.back() + carried);
    CHECK(vehicle_delay_dt2(l) >= vehicle_delay_dt1(l));
  }
}

TEST_CASE("chunked processing equals whole trace") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> speed(0.0, 0.25);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> trace(100);
    for (auto& v : trace) v = speed(rng);
    const auto cut = static_cast<std::ptrdiff_t>(trial % 100);
    auto whole = run({}, trace);
    auto split = run(run({}, {trace.begin(), trace.begin() + cut}), {trace.begin() + cut, trace.end()});
    CHECK(whole == split);
  }
}

TEST_CASE("average_approach_delay") {
  Approach a{SegmentId{3}, Movement::EBT};
  std::vector<DelayLedger> ledgers{{0, 9, 0, 0}, {0, 13, 0, 0}, {0, 2, 0, 0}};
  auto snap = average_approach_delay(a, ledgers, DelayVariant::DT1);
  CHECK_EQ(snap.average, 8.0);
  CHECK_EQ(snap.vehicle_delays.size(), 3);
  CHECK_EQ(snap.approach, a);
  CHECK_EQ(average_approach_delay(a, {}, DelayVariant::DT2).average, 0.0);

  SUBCASE("random populations equal independent mean") {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> secs(0, 60);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<DelayLedger> pop(static_cast<std::size_t>(trial + 1));
      double sum1 = 0.0;
      double sum2 = 0.0;
      for (auto& l : pop) {
        l.entry_accumulated = secs(rng);
        l.accumulated = l.entry_accumulated + secs(rng);
        l.carried_over = secs(rng);
        sum1 += l.accumulated - l.entry_accumulated;
        sum2 += l.accumulated - l.entry_accumulated + l.carried_over;
      }
      const auto n = static_cast<double>(pop.size());
      CHECK_EQ(average_approach_delay(a, pop, DelayVariant::DT1).average, doctest::Approx(sum1 / n));
      CHECK_EQ(average_approach_delay(a, pop, DelayVariant::DT2).average, doctest::Approx(sum2 / n));
    }
  }
}

TEST_CASE("segment_delay") {
  CHECK_EQ(segment_delay(0.0, 120.0, 500.0, 13.89), doctest::Approx(120.0 - 500.0 / 13.89));
  CHECK_EQ(segment_delay(10.0, 130.0, 500.0, 13.89), doctest::Approx(84.0).epsilon(0.001));
  CHECK_EQ(segment_delay(0.0, 500.0 / 13.89, 500.0, 13.89), 0.0);
  CHECK_EQ(segment_delay(0.0, 20.0, 500.0, 13.89), 0.0);
  CHECK_THROWS_AS(segment_delay(5.0, 4.0, 500.0, 13.89), InvalidArgument);
}
