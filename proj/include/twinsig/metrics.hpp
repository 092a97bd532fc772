#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "twinsig/controllers.hpp"
#include "twinsig/simulation.hpp"

namespace twinsig {

enum class LosGrade : std::uint8_t { A, B, C, D, E, F };

char to_char(LosGrade g);
std::optional<LosGrade> parse_los(std::string_view token);

struct LosResult {
  LosGrade grade{LosGrade::A};
  double control_delay{};
};

/// HCM signalized-intersection table; a boundary value belongs to the lower
/// grade (10 -> A, 20 -> B, 35 -> C, 55 -> D, 80 -> E).
LosResult los_from_control_delay(double control_delay);

/// Mean of per-vehicle stopped delays; 0 with no traversals.
double aasd(std::span<const double> stopped_delays);

struct DelayHistogram {
  double bin_width{10.0};
  std::vector<std::size_t> counts;  // bin k covers [k*w, (k+1)*w)
  Movement movement{Movement::EBT};
  std::string algorithm;

  std::size_t total() const;
};

DelayHistogram dsd_histogram(std::span<const double> delays, double bin_width, Movement movement = Movement::EBT,
                             std::string algorithm = {});

/// Fisher-Pearson moment coefficient m3 / m2^1.5; 0 for fewer than 3
/// samples or zero variance.
double sample_skewness(std::span<const double> values);

struct ControlDelaySummary {
  double mean{};
  LosResult los;
  std::size_t count{};
};

ControlDelaySummary control_delay_summary(std::span<const double> segment_delays);

struct MovementStats {
  std::vector<double> stopped_delays;
  std::vector<double> segment_delays;
  double aasd{};
};

/// Subject-intersection performance over the measured window of one run.
struct SimulationSummary {
  std::string algorithm;
  double window_start{};
  double window_end{};
  ControlDelaySummary control;
  PerMovement<MovementStats> movements{};
  std::size_t inserted{};
  std::size_t arrived{};
  std::size_t on_network{};
  std::size_t waiting_to_insert{};
  std::size_t decisions{};
  std::size_t swaps{};

  std::vector<double> all_stopped_delays() const;
};

/// Traversals of the subject's incoming approaches whose exit time lies in
/// the clock's measured window.
SimulationSummary summarize_traversals(const Network& net, std::span<const TraversalRecord> traversals,
                                       const SimClock& clock);
SimulationSummary summarize(const Simulation& sim);

nlohmann::json summary_to_json(const SimulationSummary& summary);
SimulationSummary summary_from_json(const nlohmann::json& doc);

/// (base - alt) / base * 100; nullopt when base is not positive.
std::optional<double> reduction_pct(double base, double alt);

struct AlgorithmReport {
  std::string algorithm;
  double mean_control_delay{};
  LosGrade los{LosGrade::A};
  std::size_t traversals{};
  PerMovement<double> aasd{};
  PerMovement<DelayHistogram> dsd{};
  std::optional<double> control_delay_reduction_pct;
  PerMovement<std::optional<double>> aasd_reduction_pct{};
  double stopped_delay_skewness{};
};

struct ComparisonReport {
  double bin_width{10.0};
  std::vector<AlgorithmReport> algorithms;  // baseline first
};

/// Report for one run without reductions.
AlgorithmReport algorithm_report(const SimulationSummary& summary, double bin_width = 10.0);

/// Throws InvalidArgument when no "baseline" entry exists.
ComparisonReport compare(const std::map<std::string, SimulationSummary>& results, double bin_width = 10.0);

std::string comparison_csv(const ComparisonReport& report);
nlohmann::json comparison_json(const ComparisonReport& report);
std::string dsd_csv(const ComparisonReport& report, Movement movement);

}  // namespace twinsig
