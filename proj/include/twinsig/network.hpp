#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "twinsig/movement.hpp"

namespace twinsig {

struct NodeId {
  std::uint32_t value{};
  auto operator<=>(const NodeId&) const = default;
};

struct SegmentId {
  std::uint32_t value{};
  auto operator<=>(const SegmentId&) const = default;
};

enum class NodeKind : std::uint8_t { Intersection, Fringe };

struct Node {
  NodeId id;
  std::string name;
  double x{};
  double y{};
  NodeKind kind{NodeKind::Intersection};
};

/// A directed road link ending at a stop line. The last `pocket_length`
/// meters hold a dedicated left-turn pocket next to the through lanes.
struct ApproachSegment {
  SegmentId id;
  std::string name;
  NodeId from;
  NodeId to;
  double length{};
  int lane_count{1};
  double pocket_length{};
  double free_flow_speed{};
  Heading heading{Heading::East};

  double pocket_start() const { return length - pocket_length; }
  bool has_pocket() const { return pocket_length > 0.0; }
  Movement through_movement() const { return movement_for(heading, false); }
  Movement left_movement() const { return movement_for(heading, true); }
};

/// One of the eight approaches at an intersection: a segment plus the
/// movement (through lanes or left pocket) it feeds.
struct Approach {
  SegmentId segment;
  Movement movement{Movement::EBT};
  bool operator==(const Approach&) const = default;
};

using Route = std::vector<SegmentId>;

struct GridSpec {
  int rows{3};
  int cols{3};
  double segment_length{500.0};
  int lane_count{2};
  double pocket_length{80.0};
  double free_flow_speed{13.89};
};

/// Immutable road network. Segment ids are dense indices into segments().
class Network {
 public:
  /// `upstream[i]` is the straight-ahead feeder of segment i (nullopt at the
  /// periphery). Validates geometry and id density.
  Network(std::vector<Node> nodes, std::vector<ApproachSegment> segments, NodeId subject,
          std::vector<std::optional<SegmentId>> upstream);

  std::span<const Node> nodes() const { return nodes_; }
  std::span<const ApproachSegment> segments() const { return segments_; }
  const Node& node(NodeId id) const;
  const ApproachSegment& segment(SegmentId id) const;
  NodeId subject_intersection() const { return subject_; }
  Network with_subject(NodeId subject) const;

  std::vector<NodeId> intersections() const;
  std::span<const SegmentId> incoming(NodeId id) const;
  std::span<const SegmentId> outgoing(NodeId id) const;

  /// Approaches present at an intersection, in Movement order.
  std::vector<Approach> approaches(NodeId id) const;
  std::optional<SegmentId> incoming_with_heading(NodeId id, Heading h) const;

  std::optional<SegmentId> upstream_segment(SegmentId id) const;
  std::optional<SegmentId> downstream_segment(SegmentId id) const;

  bool is_peripheral_entry(SegmentId id) const;
  bool is_peripheral_exit(SegmentId id) const;

  std::optional<SegmentId> find_segment(std::string_view name) const;
  std::optional<SegmentId> find_segment(NodeId from, NodeId to) const;
  std::optional<NodeId> find_node(std::string_view name) const;

 private:
  std::vector<Node> nodes_;
  std::vector<ApproachSegment> segments_;
  NodeId subject_;
  std::vector<std::optional<SegmentId>> upstream_;
  std::vector<std::optional<SegmentId>> downstream_;
  std::vector<std::vector<SegmentId>> incoming_;
  std::vector<std::vector<SegmentId>> outgoing_;
};

/// Grid of rows x cols signalized intersections. Every boundary intersection
/// also connects to a fringe node on each open side, so each intersection is
/// a full 4-way with 8 approaches. Subject defaults to the center node.
Network build_grid(const GridSpec& spec);

/// Shortest route (by total length, origin and destination included)
/// between two peripheral segments. Ties resolve to the lexicographically
/// smallest segment-id sequence.
Route shortest_path(const Network& net, SegmentId origin, SegmentId destination);

/// Same as shortest_path but without the peripheral preconditions; used for
/// routes pinned through intermediate segments.
Route shortest_segment_path(const Network& net, SegmentId from, SegmentId to);

/// Route visiting `via` segments in order.
Route route_through(const Network& net, SegmentId origin, std::span<const SegmentId> via,
                    SegmentId destination);

std::optional<SegmentId> upstream_approach(const Network& net, SegmentId approach);
std::optional<Approach> upstream_approach(const Network& net, const Approach& approach);

/// Movement a vehicle on route[index] performs at the end of that segment,
/// or nullopt when route[index] is the last segment.
std::optional<Turn> turn_at(const Network& net, const Route& route, std::size_t index);

inline constexpr int kNetworkSchemaVersion = 1;

nlohmann::json network_to_json(const Network& net);
Network network_from_json(const nlohmann::json& doc);

}  // namespace twinsig
