#pragma once

#include "opengraph/geom.hpp"
#include "opengraph/ingest.hpp"
#include "opengraph/types.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace opengraph::lanes {

enum class NodeKind { intersection, t_intersection, l_intersection, breakpoint };

std::string_view to_string(NodeKind kind);
NodeKind node_kind_from_string(std::string_view name);

struct LaneNode {
  Vec2 position = Vec2::Zero();
  NodeKind kind = NodeKind::breakpoint;
  /// Trajectory indices of the detection cluster behind this node.
  std::vector<std::size_t> members;
  /// True for nodes found from high disfluency (corners and crossings).
  bool interior = false;
  /// Runs of consecutive trajectory points owned by this node.
  std::vector<Points2> sections;
};

struct LaneEdge {
  std::size_t a = 0;
  std::size_t b = 0;
  /// From node a's position to node b's position.
  Points2 polyline;
  double length = 0.0;
};

struct LaneGraph {
  std::vector<LaneNode> nodes;
  std::vector<LaneEdge> edges;

  std::size_t degree(std::size_t node) const;
  /// Edge weights are polyline lengths; self loops are left out.
  geom::WeightedGraph as_weighted_graph() const;
  bool empty() const { return nodes.empty(); }
};

struct DisfluencyConfig {
  /// Neighbourhood radius R.
  double radius = 5.0;
  /// δ_dis: points with λ above this are corner/crossing candidates.
  double disfluency_threshold = 0.3;
  /// ε_bp: points with mean Θ below this are breakpoint candidates.
  double breakpoint_tolerance = 0.15;
  double cluster_eps = 5.0;
  std::size_t cluster_min_pts = 3;
  /// r_node: trajectory points this close to a node belong to it.
  double node_radius = 10.0;
  /// Centred moving-average window (samples) applied before scoring; 1 = off.
  std::size_t smoothing_window = 5;
  /// Consecutive samples further apart than this start a new trajectory piece.
  double max_step = 5.0;

  void validate() const;
};

/// Drops the vertical axis and collapses consecutive points closer than 1 cm.
/// Throws InvalidArgument when fewer than two distinct points remain.
Points2 project_trajectory(std::span<const ingest::Pose> poses);

struct Disfluency {
  /// False when fewer than two neighbour vectors exist.
  bool defined = false;
  double lambda = 0.0;
  double mean_theta = 0.0;
  std::size_t neighbor_count = 0;
};

/// λ and mean Θ at point n from the neighbour vectors within cfg.radius.
/// Zero-length vectors (coincident samples) carry no direction and are skipped.
Disfluency local_disfluency(std::span<const Vec2> points, std::size_t n, const DisfluencyConfig& cfg);

/// Disfluency from an explicit set of neighbour vectors.
Disfluency disfluency_of(std::span<const Vec2> vectors);

/// [begin, end) ranges of continuous trajectory pieces.
std::vector<std::pair<std::size_t, std::size_t>> split_pieces(std::span<const Vec2> points,
                                                              double max_step);

/// Interior (corner / crossing) nodes first, then breakpoints.
std::vector<LaneNode> detect_nodes(std::span<const Vec2> points, const DisfluencyConfig& cfg);

/// Links nodes along the trajectory and classifies them by degree.
LaneGraph build_lane_graph(std::span<const Vec2> points, std::vector<LaneNode> nodes,
                           const DisfluencyConfig& cfg);

/// project_trajectory + detect_nodes + build_lane_graph.
LaneGraph extract_lane_graph(std::span<const ingest::Pose> poses, const DisfluencyConfig& cfg);

double polyline_length(std::span<const Vec2> polyline);
double point_polyline_distance(const Vec2& p, std::span<const Vec2> polyline);

}  // namespace opengraph::lanes
