#include "twinsig/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "twinsig/error.hpp"

namespace twinsig {

char to_char(LosGrade g) { return static_cast<char>('A' + static_cast<int>(g)); }

std::optional<LosGrade> parse_los(std::string_view token) {
  if (token.size() != 1 || token[0] < 'A' || token[0] > 'F') return std::nullopt;
  return static_cast<LosGrade>(token[0] - 'A');
}

LosResult los_from_control_delay(double d) {
  if (!(d >= 0.0)) throw InvalidArgument(fmt::format("control delay must be non-negative, got {}", d));
  LosGrade g = LosGrade::F;
  if (d <= 10.0) {
    g = LosGrade::A;
  } else if (d <= 20.0) {
    g = LosGrade::B;
  } else if (d <= 35.0) {
    g = LosGrade::C;
  } else if (d <= 55.0) {
    g = LosGrade::D;
  } else if (d <= 80.0) {
    g = LosGrade::E;
  }
  return {g, d};
}

double aasd(std::span<const double> stopped_delays) {
  if (stopped_delays.empty()) return 0.0;
  double sum = 0.0;
  for (double d : stopped_delays) sum += d;
  return sum / static_cast<double>(stopped_delays.size());
}

std::size_t DelayHistogram::total() const {
  std::size_t n = 0;
  for (auto c : counts) n += c;
  return n;
}

DelayHistogram dsd_histogram(std::span<const double> delays, double bin_width, Movement movement, std::string algorithm) {
  if (!(bin_width > 0.0)) throw InvalidArgument("bin width must be positive");
  DelayHistogram h{bin_width, {}, movement, std::move(algorithm)};
  for (double d : delays) {
    if (d < 0.0 || !std::isfinite(d)) throw InvalidArgument("stopped delays must be finite and non-negative");
    const auto bin = static_cast<std::size_t>(std::floor(d / bin_width));
    if (bin >= h.counts.size()) h.counts.resize(bin + 1, 0);
    ++h.counts[bin];
  }
  return h;
}

double sample_skewness(std::span<const double> values) {
  const auto n = static_cast<double>(values.size());
  if (values.size() < 3) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double m2 = 0.0;
  double m3 = 0.0;
  for (double v : values) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= n;
  m3 /= n;
  if (m2 <= 0.0) return 0.0;
  return m3 / std::pow(m2, 1.5);
}

ControlDelaySummary control_delay_summary(std::span<const double> segment_delays) {
  ControlDelaySummary s;
  s.count = segment_delays.size();
  s.mean = aasd(segment_delays);
  s.los = los_from_control_delay(s.mean);
  return s;
}

std::vector<double> SimulationSummary::all_stopped_delays() const {
  std::vector<double> out;
  for (const auto& m : movements) out.insert(out.end(), m.stopped_delays.begin(), m.stopped_delays.end());
  return out;
}

SimulationSummary summarize_traversals(const Network& net, std::span<const TraversalRecord> traversals,
                                       const SimClock& clock) {
  SimulationSummary s;
  s.window_start = clock.measured_start();
  s.window_end = clock.measured_end();
  const NodeId subject = net.subject_intersection();
  std::vector<double> all_segment;
  for (const auto& r : traversals) {
    if (net.segment(r.segment).to != subject || !clock.in_measured_window(r.t_out)) continue;
    auto& m = s.movements[index_of(r.movement)];
    m.stopped_delays.push_back(r.stopped_delay);
    m.segment_delays.push_back(r.segment_delay);
    all_segment.push_back(r.segment_delay);
  }
  for (auto& m : s.movements) m.aasd = aasd(m.stopped_delays);
  s.control = control_delay_summary(all_segment);
  return s;
}

SimulationSummary summarize(const Simulation& sim) {
  auto s = summarize_traversals(sim.network(), sim.traversals(), sim.clock());
  s.algorithm = std::string(to_string(sim.algorithm()));
  s.inserted = sim.inserted_count();
  s.arrived = sim.arrived_count();
  s.on_network = sim.on_network_count();
  s.waiting_to_insert = sim.waiting_to_insert();
  s.decisions = sim.decisions().size();
  s.swaps = sim.swaps().size();
  return s;
}

nlohmann::json summary_to_json(const SimulationSummary& s) {
  using nlohmann::json;
  json movements = json::object();
  for (auto m : kAllMovements) {
    const auto& st = s.movements[index_of(m)];
    movements[std::string(to_string(m))] = {{"count", st.stopped_delays.size()},
                                            {"aasd", st.aasd},
                                            {"stopped_delays", st.stopped_delays},
                                            {"segment_delays", st.segment_delays}};
  }
  return {{"algorithm", s.algorithm},
          {"window", {s.window_start, s.window_end}},
          {"mean_control_delay", s.control.mean},
          {"los", std::string(1, to_char(s.control.los.grade))},
          {"traversals", s.control.count},
          {"inserted", s.inserted},
          {"arrived", s.arrived},
          {"on_network", s.on_network},
          {"waiting_to_insert", s.waiting_to_insert},
          {"decisions", s.decisions},
          {"swaps", s.swaps},
          {"movements", std::move(movements)}};
}

SimulationSummary summary_from_json(const nlohmann::json& doc) {
  try {
    SimulationSummary s;
    s.algorithm = doc.at("algorithm").get<std::string>();
    s.window_start = doc.at("window").at(0).get<double>();
    s.window_end = doc.at("window").at(1).get<double>();
    s.inserted = doc.at("inserted").get<std::size_t>();
    s.arrived = doc.at("arrived").get<std::size_t>();
    s.on_network = doc.at("on_network").get<std::size_t>();
    s.waiting_to_insert = doc.at("waiting_to_insert").get<std::size_t>();
    s.decisions = doc.at("decisions").get<std::size_t>();
    s.swaps = doc.at("swaps").get<std::size_t>();
    std::vector<double> all_segment;
    for (auto m : kAllMovements) {
      const auto& j = doc.at("movements").at(std::string(to_string(m)));
      auto& st = s.movements[index_of(m)];
      st.stopped_delays = j.at("stopped_delays").get<std::vector<double>>();
      st.segment_delays = j.at("segment_delays").get<std::vector<double>>();
      st.aasd = aasd(st.stopped_delays);
      all_segment.insert(all_segment.end(), st.segment_delays.begin(), st.segment_delays.end());
    }
    // the stored mean wins: regrouping by movement changes summation order
    s.control = control_delay_summary(all_segment);
    s.control.mean = doc.at("mean_control_delay").get<double>();
    s.control.los = los_from_control_delay(s.control.mean);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("malformed summary document: {}", e.what()));
  }
}

std::optional<double> reduction_pct(double base, double alt) {
  if (!(base > 0.0)) return std::nullopt;
  return (base - alt) / base * 100.0;
}

AlgorithmReport algorithm_report(const SimulationSummary& s, double bin_width) {
  AlgorithmReport r;
  r.algorithm = s.algorithm;
  r.mean_control_delay = s.control.mean;
  r.los = s.control.los.grade;
  r.traversals = s.control.count;
  for (auto m : kAllMovements) {
    const auto i = index_of(m);
    r.aasd[i] = s.movements[i].aasd;
    r.dsd[i] = dsd_histogram(s.movements[i].stopped_delays, bin_width, m, s.algorithm);
  }
  const auto all = s.all_stopped_delays();
  r.stopped_delay_skewness = sample_skewness(all);
  return r;
}

ComparisonReport compare(const std::map<std::string, SimulationSummary>& results, double bin_width) {
  auto base_it = results.find("baseline");
  if (base_it == results.end()) throw InvalidArgument("comparison requires a baseline result");
  const auto& base = base_it->second;
  ComparisonReport report;
  report.bin_width = bin_width;

  std::vector<std::string> order{"baseline"};
  for (auto a : kAllAlgorithms) {
    if (a != Algorithm::Baseline && results.count(std::string(to_string(a)))) order.emplace_back(to_string(a));
  }
  for (const auto& [name, _] : results) {
    if (std::find(order.begin(), order.end(), name) == order.end()) order.push_back(name);
  }

  for (const auto& name : order) {
    const auto& s = results.at(name);
    AlgorithmReport r = algorithm_report(s, bin_width);
    r.algorithm = name;
    if (&s != &base) {
      r.control_delay_reduction_pct = reduction_pct(base.control.mean, s.control.mean);
      for (auto m : kAllMovements) {
        const auto i = index_of(m);
        r.aasd_reduction_pct[i] = reduction_pct(base.movements[i].aasd, s.movements[i].aasd);
      }
    }
    report.algorithms.push_back(std::move(r));
  }
  return report;
}

namespace {

std::string opt_cell(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string{}; }

}  // namespace

std::string comparison_csv(const ComparisonReport& report) {
  std::string out = "algorithm,mean_control_delay,los,traversals,control_delay_reduction_pct";
  for (auto m : kAllMovements) out += fmt::format(",aasd_{}", to_string(m));
  for (auto m : kAllMovements) out += fmt::format(",aasd_reduction_pct_{}", to_string(m));
  out += ",stopped_delay_skewness\n";
  for (const auto& r : report.algorithms) {
    out += fmt::format("{},{},{},{},{}", r.algorithm, r.mean_control_delay, to_char(r.los), r.traversals,
                       opt_cell(r.control_delay_reduction_pct));
    for (double a : r.aasd) out += fmt::format(",{}", a);
    for (const auto& p : r.aasd_reduction_pct) out += "," + opt_cell(p);
    out += fmt::format(",{}\n", r.stopped_delay_skewness);
  }
  return out;
}

nlohmann::json comparison_json(const ComparisonReport& report) {
  using nlohmann::json;
  json algos = json::array();
  for (const auto& r : report.algorithms) {
    json aasd_j = json::object();
    json red_j = json::object();
    for (auto m : kAllMovements) {
      const auto i = index_of(m);
      aasd_j[std::string(to_string(m))] = r.aasd[i];
      red_j[std::string(to_string(m))] = r.aasd_reduction_pct[i] ? json(*r.aasd_reduction_pct[i]) : json(nullptr);
    }
    algos.push_back({{"algorithm", r.algorithm},
                     {"mean_control_delay", r.mean_control_delay},
                     {"los", std::string(1, to_char(r.los))},
                     {"traversals", r.traversals},
                     {"control_delay_reduction_pct",
                      r.control_delay_reduction_pct ? json(*r.control_delay_reduction_pct) : json(nullptr)},
                     {"aasd", std::move(aasd_j)},
                     {"aasd_reduction_pct", std::move(red_j)},
                     {"stopped_delay_skewness", r.stopped_delay_skewness}});
  }
  return {{"bin_width", report.bin_width}, {"algorithms", std::move(algos)}};
}

std::string dsd_csv(const ComparisonReport& report, Movement movement) {
  const auto i = index_of(movement);
  std::size_t bins = 0;
  for (const auto& r : report.algorithms) bins = std::max(bins, r.dsd[i].counts.size());
  std::string out = "bin_start,bin_end";
  for (const auto& r : report.algorithms) out += "," + r.algorithm;
  out += "\n";
  for (std::size_t b = 0; b < bins; ++b) {
    out += fmt::format("{},{}", static_cast<double>(b) * report.bin_width, static_cast<double>(b + 1) * report.bin_width);
    for (const auto& r : report.algorithms) {
      const auto& c = r.dsd[i].counts;
      out += fmt::format(",{}", b < c.size() ? c[b] : 0);
    }
    out += "\n";
  }
  return out;
}

}  // namespace twinsig
