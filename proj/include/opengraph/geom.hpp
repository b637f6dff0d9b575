#pragma once

#include "opengraph/types.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace opengraph::geom {

struct AxisAlignedBox {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  /// Tight box around a non-empty point set.
  static AxisAlignedBox from_points(std::span<const Vec3> points);

  Vec3 extent() const { return max - min; }
  Vec3 center() const { return 0.5 * (min + max); }
  double volume() const;
  bool valid() const { return (min.array() <= max.array()).all(); }

  bool operator==(const AxisAlignedBox& other) const {
    return min == other.min && max == other.max;
  }
};

/// Per-axis extent below which a box is widened for IoU purposes.
inline constexpr double kBoxExtentFloor = 0.01;

/// Volume of the intersection over volume of the union. Axes thinner than
/// kBoxExtentFloor are widened symmetrically to that floor first.
double aabb_iou(const AxisAlignedBox& a, const AxisAlignedBox& b);

/// Shortest Euclidean distance between two boxes, 0 if they touch or overlap.
double aabb_gap(const AxisAlignedBox& a, const AxisAlignedBox& b);

template <typename A, typename B>
double cosine_similarity(const Eigen::MatrixBase<A>& u, const Eigen::MatrixBase<B>& v) {
  if (u.size() != v.size()) {
    throw InvalidArgument("cosine_similarity: dimension mismatch");
  }
  const Eigen::VectorXd a = u.template cast<double>();
  const Eigen::VectorXd b = v.template cast<double>();
  const double aa = a.dot(a);
  const double bb = b.dot(b);
  if (aa == 0.0 || bb == 0.0) {
    throw InvalidArgument("cosine_similarity: zero-norm vector");
  }
  const double c = a.dot(b) / std::sqrt(aa * bb);
  return std::clamp(c, -1.0, 1.0);
}

inline constexpr int kNoise = -1;

/// Density-based clustering. A point is core when at least `min_pts` points
/// (itself included) lie within `eps`. Cluster ids are contiguous from 0 in
/// order of each cluster's lowest-index core point; a border point reachable
/// from several clusters joins the lowest id. Noise is kNoise.
template <int Dim>
std::vector<int> dbscan(std::span<const Eigen::Matrix<double, Dim, 1>> points,
                        double eps, std::size_t min_pts);

/// One centroid per occupied voxel, ordered by ascending (ix, iy, iz).
Points3 voxel_downsample(std::span<const Vec3> points, double voxel);

struct WeightedEdge {
  std::size_t u = 0;
  std::size_t v = 0;
  double weight = 0.0;

  bool operator==(const WeightedEdge&) const = default;
};

/// Undirected graph with non-negative weights, no self loops, no parallel edges.
class WeightedGraph {
 public:
  explicit WeightedGraph(std::size_t node_count = 0) : node_count_(node_count) {}

  void add_edge(std::size_t u, std::size_t v, double weight);

  std::size_t node_count() const { return node_count_; }
  const std::vector<WeightedEdge>& edges() const { return edges_; }

 private:
  std::size_t node_count_;
  std::vector<WeightedEdge> edges_;
};

/// Kruskal. Edges are returned with u < v in (weight, u, v) order, which is
/// also the tie-breaking order. Throws InvalidArgument on a disconnected graph.
std::vector<WeightedEdge> minimum_spanning_tree(const WeightedGraph& graph);

/// Prim over an implicit complete graph; `weight(i, j)` is called with i < j.
/// Produces the same tree as minimum_spanning_tree on the equivalent
/// explicit graph because both order edges by (weight, u, v).
template <typename WeightFn>
std::vector<WeightedEdge> dense_minimum_spanning_tree(std::size_t n, WeightFn&& weight);

struct PathResult {
  bool found = false;
  std::vector<std::size_t> nodes;
  double cost = 0.0;
};

/// Dijkstra with a deterministic tie-break: among all minimum-cost paths the
/// lexicographically smallest node sequence is returned.
PathResult shortest_path(const WeightedGraph& graph, std::size_t src, std::size_t dst);

/// Uniform-grid index over 2D or 3D points for fixed-radius queries.
template <int Dim>
class GridIndex {
 public:
  using Point = Eigen::Matrix<double, Dim, 1>;

  GridIndex(std::span<const Point> points, double cell);

  /// Indices of points with distance <= radius (radius <= cell), ascending.
  std::vector<std::size_t> within(const Point& query, double radius) const;

  /// Nearest point within radius, lowest index on ties.
  std::optional<std::size_t> nearest(const Point& query, double radius) const;

 private:
  std::span<const Point> points_;
  double cell_;
  std::vector<std::pair<std::array<std::int64_t, Dim>, std::size_t>> sorted_;

  template <typename Fn>
  void visit_cells(const Point& query, Fn&& fn) const;
};

// ---------------------------------------------------------------------------

template <typename WeightFn>
std::vector<WeightedEdge> dense_minimum_spanning_tree(std::size_t n, WeightFn&& weight) {
  std::vector<WeightedEdge> tree;
  if (n <= 1) return tree;
  tree.reserve(n - 1);

  struct Key {
    double w;
    std::size_t u, v;
    bool operator<(const Key& o) const {
      if (w != o.w) return w < o.w;
      if (u != o.u) return u < o.u;
      return v < o.v;
    }
  };
  const Key unreachable{std::numeric_limits<double>::infinity(), n, n};
  std::vector<Key> best(n, unreachable);
  std::vector<bool> in_tree(n, false);

  auto relax = [&](std::size_t from) {
    for (std::size_t j = 0; j < n; ++j) {
      if (in_tree[j]) continue;
      const std::size_t a = std::min(from, j);
      const std::size_t b = std::max(from, j);
      const Key k{static_cast<double>(weight(a, b)), a, b};
      if (k < best[j]) best[j] = k;
    }
  };

  in_tree[0] = true;
  relax(0);
  for (std::size_t step = 1; step < n; ++step) {
    std::size_t pick = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (!in_tree[j] && (pick == n || best[j] < best[pick])) pick = j;
    }
    tree.push_back({best[pick].u, best[pick].v, best[pick].w});
    in_tree[pick] = true;
    relax(pick);
  }
  std::sort(tree.begin(), tree.end(), [](const WeightedEdge& a, const WeightedEdge& b) {
    if (a.weight != b.weight) return a.weight < b.weight;
    if (a.u != b.u) return a.u < b.u;
    return a.v < b.v;
  });
  return tree;
}

}  // namespace opengraph::geom
