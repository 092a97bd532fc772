#include "twinsig/controllers.hpp"
#include "twinsig/error.hpp"

#include <cmath>
#include <limits>
#include <random>

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

using namespace twinsig;

namespace {

DecisionInput input_of(std::array<double, 8> v) {
  DecisionInput in;
  in.values = v;
  return in;
}

// Independent restatement of the if/else chain over the raw array
// (index order EBT WBT NBT SBT EBL WBL NBL SBL).
int oracle_phase(const std::array<double, 8>& v) {
  double mx = v[0];
  for (double x : v) mx = x > mx ? x : mx;
  if (v[2] == mx || v[3] == mx) return 0;
  if (v[1] == mx || v[0] == mx) return 2;
  if (v[5] == mx || v[4] == mx) return 4;
  if (v[6] == mx || v[7] == mx) return 6;
  return -1;
}

std::array<double, 8> random_values(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(0.0, 200.0);
  std::array<double, 8> v{};
  for (auto& x : v) x = d(rng);
  return v;
}

}  // namespace

TEST_CASE("approach_density") {
  CHECK_EQ(approach_density(30, 2, 0.5), 30.0);
  CHECK_EQ(approach_density(0, 3, 0.1), 0.0);
  CHECK_EQ(approach_density(12, 3, 0.25), 16.0);
  CHECK_THROWS_AS(approach_density(1, 0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(approach_density(1, 1, 0.0), InvalidArgument);
}

TEST_CASE("decision examples") {
  SUBCASE("EBT strictly max") {
    auto d = baseline_decide(input_of({50, 1, 2, 3, 4, 5, 6, 7}));
    REQUIRE(d.proposed_phase);
    CHECK_EQ(d.proposed_phase->index(), 2);
    CHECK_EQ(d.winning_movement, Movement::EBT);
    CHECK_EQ(d.winning_value, 50.0);
  }
  SUBCASE("all equal picks the first branch") {
    CHECK_EQ(baseline_decide(input_of({3, 3, 3, 3, 3, 3, 3, 3})).proposed_phase->index(), 0);
    CHECK_EQ(dt1_decide(input_of({0, 0, 0, 0, 0, 0, 0, 0})).proposed_phase->index(), 0);
  }
  SUBCASE("EB starvation") {
    CHECK_EQ(dt1_decide(input_of({46.5, 6.6, 1.57, 0.73, 2, 3, 4, 5})).proposed_phase->index(), 2);
  }
  SUBCASE("NBL max via carried-over") {
    CHECK_EQ(dt2_decide(input_of({1, 2, 3, 4, 5, 6, 40, 7})).proposed_phase->index(), 6);
  }
  SUBCASE("NaN matches no group") {
    auto d = chain_decide(input_of({std::nan(""), 1, 1, 1, 1, 1, 1, 1}));
    CHECK(d.out_of_order());
    CHECK_THROWS_AS(validate(input_of({std::nan(""), 1, 1, 1, 1, 1, 1, 1})), InvalidArgument);
    CHECK_THROWS_AS(validate(input_of({-1, 1, 1, 1, 1, 1, 1, 1})), InvalidArgument);
  }
}

TEST_CASE("random inputs match the chain oracle") {
  std::mt19937_64 rng(31337);
  for (auto a : kAllAlgorithms) {
    for (int trial = 0; trial < 1000; ++trial) {
      auto v = random_values(rng);
      // coarse values create frequent ties
      if (trial % 3 == 0) {
        for (auto& x : v) x = std::floor(x / 50.0);
      }
      auto d = decide_with(a, input_of(v));
      REQUIRE(d.proposed_phase);
      CHECK_EQ(d.proposed_phase->index(), oracle_phase(v));
      double mx = v[0];
      for (double x : v) mx = std::max(mx, x);
      CHECK_EQ(d.winning_value, mx);
      CHECK_EQ(v[index_of(d.winning_movement)], mx);
      CHECK_EQ(green_phase_for(d.winning_movement), *d.proposed_phase);
    }
  }
}

TEST_CASE("all 255 tie patterns") {
  for (int mask = 1; mask < 256; ++mask) {
    std::array<double, 8> v{};
    for (int i = 0; i < 8; ++i) v[static_cast<std::size_t>(i)] = (mask >> i) & 1 ? 9.0 : 1.0;
    const int expect = oracle_phase(v);
    for (auto a : kAllAlgorithms) CHECK_EQ(decide_with(a, input_of(v)).proposed_phase->index(), expect);
  }
}

TEST_CASE("scale invariance") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (int trial = 0; trial < 500; ++trial) {
    auto v = random_values(rng);
    // even trials: exact tie between a through pair and scaling by 2, which
    // is exact in binary and so keeps the tie
    if (trial % 2 == 0) v[7] = v[4] = 1000.0 + v[0];
    const double c = trial % 2 == 0 ? 2.0 : scale(rng);
    auto w = v;
    for (auto& x : w) x *= c;
    CHECK_EQ(chain_decide(input_of(v)).proposed_phase, chain_decide(input_of(w)).proposed_phase);
  }
}

TEST_CASE("build_input") {
  IntersectionObservation obs;
  for (auto m : kAllMovements) {
    auto& a = obs.approaches[index_of(m)];
    a.approach = {SegmentId{static_cast<std::uint32_t>(index_of(m))}, m};
    a.lane_count = is_left(m) ? 1 : 2;
    a.lane_length = is_left(m) ? 80.0 : 500.0;
  }
  SUBCASE("densities") {
    obs.approaches[index_of(Movement::EBT)].ledgers.resize(4);
    obs.approaches[index_of(Movement::NBL)].ledgers.resize(1);
    auto in = build_input(Algorithm::Baseline, obs);
    CHECK_EQ(in[Movement::EBT], doctest::Approx(4.0 / (2.0 * 500.0 / kMetersPerMile)));
    CHECK_EQ(in[Movement::NBL], doctest::Approx(1.0 / (80.0 / kMetersPerMile)));
    CHECK_EQ(in[Movement::WBT], 0.0);
  }
  SUBCASE("zero carried-over makes DT1 and DT2 agree") {
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> secs(0, 40);
    for (int trial = 0; trial < 200; ++trial) {
      for (auto& a : obs.approaches) {
        a.ledgers.assign(static_cast<std::size_t>(secs(rng) % 5), {});
        for (auto& l : a.ledgers) {
          l.entry_accumulated = secs(rng);
          l.accumulated = l.entry_accumulated + secs(rng);
        }
      }
      CHECK_EQ(build_input(Algorithm::DT1, obs).values, build_input(Algorithm::DT2, obs).values);
      CHECK_EQ(dt1_decide(build_input(Algorithm::DT1, obs)).proposed_phase,
               dt2_decide(build_input(Algorithm::DT2, obs)).proposed_phase);
    }
  }
  SUBCASE("composed delay and chain oracle") {
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<int> secs(0, 60);
    for (int trial = 0; trial < 1000; ++trial) {
      std::array<double, 8> expect{};
      for (auto m : kAllMovements) {
        auto& a = obs.approaches[index_of(m)];
        a.ledgers.assign(static_cast<std::size_t>(secs(rng) % 6), {});
        double sum = 0.0;
        for (auto& l : a.ledgers) {
          l.entry_accumulated = secs(rng);
          l.accumulated = l.entry_accumulated + secs(rng);
          l.carried_over = secs(rng);
          sum += (l.accumulated - l.entry_accumulated) + l.carried_over;
        }
        expect[index_of(m)] = a.ledgers.empty() ? 0.0 : sum / static_cast<double>(a.ledgers.size());
      }
      auto in = build_input(Algorithm::DT2, obs);
      for (std::size_t i = 0; i < 8; ++i) CHECK_EQ(in.values[i], doctest::Approx(expect[i]));
      CHECK_EQ(dt2_decide(in).proposed_phase->index(), oracle_phase(in.values));
    }
  }
}

TEST_CASE("algorithm tokens") {
  CHECK_EQ(parse_algorithm("baseline"), Algorithm::Baseline);
  CHECK_EQ(parse_algorithm("dt1"), Algorithm::DT1);
  CHECK_EQ(parse_algorithm("dt2"), Algorithm::DT2);
  try {
    parse_algorithm("dt3");
    FAIL("expected rejection");
  } catch (const InvalidArgument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("baseline") != std::string::npos);
    CHECK(msg.find("dt1") != std::string::npos);
    CHECK(msg.find("dt2") != std::string::npos);
  }
}
