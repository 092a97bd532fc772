#include "twinsig/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <utility>

#include <fmt/format.h>

#include "twinsig/error.hpp"

namespace twinsig {

namespace {

constexpr std::array<std::string_view, kMovementCount> kMovementNames{"EBT", "WBT", "NBT", "SBT",
                                                                      "EBL", "WBL", "NBL", "SBL"};

bool allowed_transition(const Network& net, const ApproachSegment& in, const ApproachSegment& out) {
  if (net.node(in.to).kind != NodeKind::Intersection) return false;
  if (out.from != in.to || out.to == in.from) return false;
  return turn_between(in.heading, out.heading).has_value();
}

std::vector<std::optional<SegmentId>> straight_feeders(const std::vector<Node>& nodes,
                                                       const std::vector<ApproachSegment>& segs) {
  std::vector<std::optional<SegmentId>> up(segs.size());
  for (const auto& s : segs) {
    if (nodes[s.from.value].kind != NodeKind::Intersection) continue;
    for (const auto& cand : segs) {
      if (cand.to == s.from && cand.heading == s.heading) {
        up[s.id.value] = cand.id;
        break;
      }
    }
  }
  return up;
}

}  // namespace

std::string_view to_string(Movement m) { return kMovementNames[index_of(m)]; }

std::string_view to_string(Heading h) {
  switch (h) {
    case Heading::East: return "E";
    case Heading::West: return "W";
    case Heading::North: return "N";
    case Heading::South: return "S";
  }
  return "?";
}

std::optional<Movement> parse_movement(std::string_view token) {
  for (auto m : kAllMovements) {
    if (to_string(m) == token) return m;
  }
  return std::nullopt;
}

std::optional<Heading> parse_heading(std::string_view token) {
  for (auto h : {Heading::East, Heading::West, Heading::North, Heading::South}) {
    if (to_string(h) == token) return h;
  }
  return std::nullopt;
}

Network::Network(std::vector<Node> nodes, std::vector<ApproachSegment> segments, NodeId subject,
                 std::vector<std::optional<SegmentId>> upstream)
    : nodes_(std::move(nodes)),
      segments_(std::move(segments)),
      subject_(subject),
      upstream_(std::move(upstream)) {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].id.value != i) throw InvalidArgument(fmt::format("node ids must be dense; index {} has id {}", i, nodes_[i].id.value));
  }
  if (upstream_.size() != segments_.size()) throw InvalidArgument("upstream table size does not match segment count");
  incoming_.assign(nodes_.size(), {});
  outgoing_.assign(nodes_.size(), {});
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& s = segments_[i];
    if (s.id.value != i) throw InvalidArgument(fmt::format("segment ids must be dense; index {} has id {}", i, s.id.value));
    if (s.from.value >= nodes_.size() || s.to.value >= nodes_.size()) throw InvalidArgument(fmt::format("segment {} references an unknown node", s.name));
    if (!(s.length > 0.0)) throw InvalidArgument(fmt::format("segment {}: length must be positive", s.name));
    if (s.lane_count < 1) throw InvalidArgument(fmt::format("segment {}: lane_count must be >= 1", s.name));
    if (s.pocket_length < 0.0 || s.pocket_length >= s.length) throw InvalidArgument(fmt::format("segment {}: pocket_length must lie in [0, length)", s.name));
    if (!(s.free_flow_speed > 0.0)) throw InvalidArgument(fmt::format("segment {}: free_flow_speed must be positive", s.name));
    incoming_[s.to.value].push_back(s.id);
    outgoing_[s.from.value].push_back(s.id);
  }
  if (subject_.value >= nodes_.size() || nodes_[subject_.value].kind != NodeKind::Intersection) {
    throw InvalidArgument("subject intersection must be an intersection node");
  }
  downstream_.assign(segments_.size(), std::nullopt);
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& up = upstream_[i];
    if (!up) continue;
    if (up->value >= segments_.size() || segments_[up->value].to != segments_[i].from) {
      throw InvalidArgument(fmt::format("upstream of segment {} does not end where it starts", segments_[i].name));
    }
    if (downstream_[up->value]) throw InvalidArgument(fmt::format("segment {} feeds two straight continuations", segments_[up->value].name));
    downstream_[up->value] = SegmentId{static_cast<std::uint32_t>(i)};
  }
}

const Node& Network::node(NodeId id) const {
  if (id.value >= nodes_.size()) throw UnknownId(fmt::format("unknown node id {}", id.value));
  return nodes_[id.value];
}

const ApproachSegment& Network::segment(SegmentId id) const {
  if (id.value >= segments_.size()) throw UnknownId(fmt::format("unknown segment id {}", id.value));
  return segments_[id.value];
}

Network Network::with_subject(NodeId subject) const {
  return Network(nodes_, segments_, subject, upstream_);
}

std::vector<NodeId> Network::intersections() const {
  std::vector<NodeId> out;
  for (const auto& n : nodes_) {
    if (n.kind == NodeKind::Intersection) out.push_back(n.id);
  }
  return out;
}

std::span<const SegmentId> Network::incoming(NodeId id) const { return incoming_.at(node(id).id.value); }
std::span<const SegmentId> Network::outgoing(NodeId id) const { return outgoing_.at(node(id).id.value); }

std::optional<SegmentId> Network::incoming_with_heading(NodeId id, Heading h) const {
  for (auto s : incoming(id)) {
    if (segments_[s.value].heading == h) return s;
  }
  return std::nullopt;
}

std::vector<Approach> Network::approaches(NodeId id) const {
  std::vector<Approach> out;
  if (node(id).kind != NodeKind::Intersection) return out;
  for (auto m : kAllMovements) {
    if (auto s = incoming_with_heading(id, heading_of(m))) out.push_back({*s, m});
  }
  return out;
}

std::optional<SegmentId> Network::upstream_segment(SegmentId id) const { return upstream_.at(segment(id).id.value); }
std::optional<SegmentId> Network::downstream_segment(SegmentId id) const { return downstream_.at(segment(id).id.value); }

bool Network::is_peripheral_entry(SegmentId id) const { return node(segment(id).from).kind == NodeKind::Fringe; }
bool Network::is_peripheral_exit(SegmentId id) const { return node(segment(id).to).kind == NodeKind::Fringe; }

std::optional<SegmentId> Network::find_segment(std::string_view name) const {
  for (const auto& s : segments_) {
    if (s.name == name) return s.id;
  }
  return std::nullopt;
}

std::optional<SegmentId> Network::find_segment(NodeId from, NodeId to) const {
  for (auto s : outgoing(from)) {
    if (segments_[s.value].to == to) return s;
  }
  return std::nullopt;
}

std::optional<NodeId> Network::find_node(std::string_view name) const {
  for (const auto& n : nodes_) {
    if (n.name == name) return n.id;
  }
  return std::nullopt;
}

Network build_grid(const GridSpec& spec) {
  if (spec.rows < 1 || spec.cols < 1) throw InvalidArgument("grid dimensions must be positive");
  if (!(spec.segment_length > 0.0) || spec.lane_count < 1 || !(spec.free_flow_speed > 0.0)) {
    throw InvalidArgument("grid segment length, lane count and free-flow speed must be positive");
  }
  if (!(spec.pocket_length > 0.0) || spec.pocket_length >= spec.segment_length) {
    throw InvalidArgument("pocket length must be positive and shorter than the segment");
  }
  const int rows = spec.rows;
  const int cols = spec.cols;
  const double len = spec.segment_length;

  std::vector<Node> nodes;
  auto add_node = [&](std::string name, double x, double y, NodeKind kind) {
    nodes.push_back({NodeId{static_cast<std::uint32_t>(nodes.size())}, std::move(name), x, y, kind});
  };
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) add_node(fmt::format("I{}_{}", r, c), c * len, r * len, NodeKind::Intersection);
  const auto west0 = static_cast<std::uint32_t>(nodes.size());
  for (int r = 0; r < rows; ++r) add_node(fmt::format("W{}", r), -len, r * len, NodeKind::Fringe);
  const auto east0 = static_cast<std::uint32_t>(nodes.size());
  for (int r = 0; r < rows; ++r) add_node(fmt::format("E{}", r), cols * len, r * len, NodeKind::Fringe);
  const auto south0 = static_cast<std::uint32_t>(nodes.size());
  for (int c = 0; c < cols; ++c) add_node(fmt::format("S{}", c), c * len, -len, NodeKind::Fringe);
  const auto north0 = static_cast<std::uint32_t>(nodes.size());
  for (int c = 0; c < cols; ++c) add_node(fmt::format("N{}", c), c * len, rows * len, NodeKind::Fringe);

  // (r, c) with one coordinate allowed one step outside the grid.
  auto at = [&](int r, int c) -> NodeId {
    if (c < 0) return NodeId{west0 + static_cast<std::uint32_t>(r)};
    if (c >= cols) return NodeId{east0 + static_cast<std::uint32_t>(r)};
    if (r < 0) return NodeId{south0 + static_cast<std::uint32_t>(c)};
    if (r >= rows) return NodeId{north0 + static_cast<std::uint32_t>(c)};
    return NodeId{static_cast<std::uint32_t>(r * cols + c)};
  };

  std::vector<ApproachSegment> segs;
  auto add_seg = [&](NodeId from, NodeId to, Heading h) {
    ApproachSegment s;
    s.id = SegmentId{static_cast<std::uint32_t>(segs.size())};
    s.name = fmt::format("{}>{}", nodes[from.value].name, nodes[to.value].name);
    s.from = from;
    s.to = to;
    s.length = len;
    s.lane_count = spec.lane_count;
    s.pocket_length = spec.pocket_length;
    s.free_flow_speed = spec.free_flow_speed;
    s.heading = h;
    segs.push_back(std::move(s));
  };
  for (int r = 0; r < rows; ++r)
    for (int c = -1; c < cols; ++c) add_seg(at(r, c), at(r, c + 1), Heading::East);
  for (int r = 0; r < rows; ++r)
    for (int c = cols; c > -1; --c) add_seg(at(r, c), at(r, c - 1), Heading::West);
  for (int c = 0; c < cols; ++c)
    for (int r = -1; r < rows; ++r) add_seg(at(r, c), at(r + 1, c), Heading::North);
  for (int c = 0; c < cols; ++c)
    for (int r = rows; r > -1; --r) add_seg(at(r, c), at(r - 1, c), Heading::South);

  auto upstream = straight_feeders(nodes, segs);
  const NodeId center = at(rows / 2, cols / 2);
  return Network(std::move(nodes), std::move(segs), center, std::move(upstream));
}

Route shortest_segment_path(const Network& net, SegmentId from, SegmentId to) {
  const auto& origin = net.segment(from);
  net.segment(to);
  if (from == to) return {from};

  const auto segs = net.segments();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(segs.size(), kInf);
  using Item = std::pair<double, std::uint32_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[to.value] = segs[to.value].length;
  heap.push({dist[to.value], to.value});
  while (!heap.empty()) {
    auto [d, t] = heap.top();
    heap.pop();
    if (d > dist[t]) continue;
    const auto& out = segs[t];
    if (net.node(out.from).kind != NodeKind::Intersection) continue;
    for (auto p : net.incoming(out.from)) {
      const auto& in = segs[p.value];
      if (!allowed_transition(net, in, out)) continue;
      const double nd = in.length + d;
      if (nd < dist[p.value]) {
        dist[p.value] = nd;
        heap.push({nd, p.value});
      }
    }
  }
  if (dist[from.value] == kInf) {
    throw NoPath(fmt::format("no route from {} to {}", origin.name, segs[to.value].name));
  }

  const double eps = 1e-9 * std::max(1.0, dist[from.value]);
  Route route{from};
  SegmentId cur = from;
  while (cur != to) {
    const auto& in = segs[cur.value];
    const double remaining = dist[cur.value] - in.length;
    std::optional<SegmentId> next;
    for (auto cand : net.outgoing(in.to)) {
      if (!allowed_transition(net, in, segs[cand.value])) continue;
      if (std::abs(dist[cand.value] - remaining) > eps) continue;
      if (!next || cand < *next) next = cand;
    }
    // dist strictly decreases along the walk, so a successor always exists.
    cur = *next;
    route.push_back(cur);
  }
  return route;
}

Route shortest_path(const Network& net, SegmentId origin, SegmentId destination) {
  if (origin == destination) {
    net.segment(origin);
    return {origin};
  }
  if (!net.is_peripheral_entry(origin)) throw InvalidArgument(fmt::format("origin {} is not a peripheral entry", net.segment(origin).name));
  if (!net.is_peripheral_exit(destination)) throw InvalidArgument(fmt::format("destination {} is not a peripheral exit", net.segment(destination).name));
  return shortest_segment_path(net, origin, destination);
}

Route route_through(const Network& net, SegmentId origin, std::span<const SegmentId> via, SegmentId destination) {
  if (via.empty()) return shortest_path(net, origin, destination);
  Route route{origin};
  SegmentId cur = origin;
  auto extend = [&](SegmentId target) {
    auto leg = shortest_segment_path(net, cur, target);
    route.insert(route.end(), leg.begin() + 1, leg.end());
    cur = target;
  };
  for (auto v : via) extend(v);
  extend(destination);
  auto sorted = route;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw InvalidArgument("via segments force a route that revisits a segment");
  }
  return route;
}

std::optional<SegmentId> upstream_approach(const Network& net, SegmentId approach) {
  return net.upstream_segment(approach);
}

std::optional<Approach> upstream_approach(const Network& net, const Approach& approach) {
  auto up = net.upstream_segment(approach.segment);
  if (!up) return std::nullopt;
  return Approach{*up, approach.movement};
}

std::optional<Turn> turn_at(const Network& net, const Route& route, std::size_t index) {
  if (index + 1 >= route.size()) return std::nullopt;
  return turn_between(net.segment(route[index]).heading, net.segment(route[index + 1]).heading);
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json network_to_json(const Network& net) {
  using nlohmann::json;
  json doc;
  doc["schema_version"] = kNetworkSchemaVersion;
  doc["subject_intersection"] = net.subject_intersection().value;
  json nodes = json::array();
  for (const auto& n : net.nodes()) {
    nodes.push_back({{"id", n.id.value},
                     {"name", n.name},
                     {"x", n.x},
                     {"y", n.y},
                     {"kind", n.kind == NodeKind::Intersection ? "intersection" : "fringe"}});
  }
  doc["nodes"] = std::move(nodes);
  json segs = json::array();
  for (const auto& s : net.segments()) {
    auto up = net.upstream_segment(s.id);
    segs.push_back({{"id", s.id.value},
                    {"name", s.name},
                    {"from", s.from.value},
                    {"to", s.to.value},
                    {"length", s.length},
                    {"lane_count", s.lane_count},
                    {"pocket_length", s.pocket_length},
                    {"free_flow_speed", s.free_flow_speed},
                    {"heading", to_string(s.heading)},
                    {"upstream", up ? json(up->value) : json(nullptr)}});
  }
  doc["segments"] = std::move(segs);
  json adj = json::array();
  for (auto id : net.intersections()) {
    json approaches = json::array();
    for (const auto& a : net.approaches(id)) {
      auto up = upstream_approach(net, a.segment);
      approaches.push_back({{"movement", to_string(a.movement)},
                            {"segment", a.segment.value},
                            {"upstream", up ? json(up->value) : json(nullptr)}});
    }
    adj.push_back({{"intersection", id.value}, {"approaches", std::move(approaches)}});
  }
  doc["adjacency"] = std::move(adj);
  return doc;
}

Network network_from_json(const nlohmann::json& doc) {
  try {
    const int version = doc.at("schema_version").get<int>();
    if (version != kNetworkSchemaVersion) {
      throw ConfigError(fmt::format("unsupported network schema_version {} (expected {})", version, kNetworkSchemaVersion));
    }
    std::vector<Node> nodes;
    for (const auto& n : doc.at("nodes")) {
      const auto kind = n.at("kind").get<std::string>();
      if (kind != "intersection" && kind != "fringe") throw ConfigError(fmt::format("unknown node kind '{}'", kind));
      nodes.push_back({NodeId{n.at("id").get<std::uint32_t>()}, n.at("name").get<std::string>(), n.at("x").get<double>(),
                       n.at("y").get<double>(), kind == "intersection" ? NodeKind::Intersection : NodeKind::Fringe});
    }
    std::vector<ApproachSegment> segs;
    std::vector<std::optional<SegmentId>> upstream;
    for (const auto& s : doc.at("segments")) {
      ApproachSegment seg;
      seg.id = SegmentId{s.at("id").get<std::uint32_t>()};
      seg.name = s.at("name").get<std::string>();
      seg.from = NodeId{s.at("from").get<std::uint32_t>()};
      seg.to = NodeId{s.at("to").get<std::uint32_t>()};
      seg.length = s.at("length").get<double>();
      seg.lane_count = s.at("lane_count").get<int>();
      seg.pocket_length = s.at("pocket_length").get<double>();
      seg.free_flow_speed = s.at("free_flow_speed").get<double>();
      auto heading = parse_heading(s.at("heading").get<std::string>());
      if (!heading) throw ConfigError(fmt::format("segment {}: unknown heading", seg.name));
      seg.heading = *heading;
      const auto& up = s.at("upstream");
      upstream.push_back(up.is_null() ? std::nullopt : std::optional<SegmentId>(SegmentId{up.get<std::uint32_t>()}));
      segs.push_back(std::move(seg));
    }
    Network net(std::move(nodes), std::move(segs), NodeId{doc.at("subject_intersection").get<std::uint32_t>()},
                std::move(upstream));
    if (doc.contains("adjacency")) {
      for (const auto& entry : doc.at("adjacency")) {
        const NodeId id{entry.at("intersection").get<std::uint32_t>()};
        for (const auto& a : entry.at("approaches")) {
          auto m = parse_movement(a.at("movement").get<std::string>());
          const SegmentId seg{a.at("segment").get<std::uint32_t>()};
          if (!m || net.segment(seg).to != id || net.segment(seg).heading != heading_of(*m)) {
            throw ConfigError(fmt::format("adjacency entry for intersection {} is inconsistent with segments", id.value));
          }
          const auto& up = a.at("upstream");
          const auto expected = net.upstream_segment(seg);
          if (up.is_null() != !expected.has_value() || (expected && up.get<std::uint32_t>() != expected->value)) {
            throw ConfigError(fmt::format("adjacency upstream for segment {} disagrees with segment table", seg.value));
          }
        }
      }
    }
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("malformed network document: {}", e.what()));
  } catch (const InvalidArgument& e) {
    throw ConfigError(fmt::format("invalid network: {}", e.what()));
  } catch (const UnknownId& e) {
    throw ConfigError(fmt::format("invalid network: {}", e.what()));
  }
}

}  // namespace twinsig
