#include "opengraph/lane_graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace opengraph::lanes {

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::intersection: return "intersection";
    case NodeKind::t_intersection: return "t_intersection";
    case NodeKind::l_intersection: return "l_intersection";
    case NodeKind::breakpoint: return "breakpoint";
  }
  return "breakpoint";
}

NodeKind node_kind_from_string(std::string_view name) {
  if (name == "intersection") return NodeKind::intersection;
  if (name == "t_intersection") return NodeKind::t_intersection;
  if (name == "l_intersection") return NodeKind::l_intersection;
  if (name == "breakpoint") return NodeKind::breakpoint;
  throw DataError("unknown lane node kind '" + std::string(name) + "'");
}

std::size_t LaneGraph::degree(std::size_t node) const {
  std::size_t d = 0;
  for (const LaneEdge& e : edges) {
    if (e.a == e.b) continue;
    if (e.a == node || e.b == node) ++d;
  }
  return d;
}

geom::WeightedGraph LaneGraph::as_weighted_graph() const {
  geom::WeightedGraph g(nodes.size());
  for (const LaneEdge& e : edges) {
    if (e.a != e.b) g.add_edge(e.a, e.b, e.length);
  }
  return g;
}

void DisfluencyConfig::validate() const {
  if (!(radius > 0.0 && disfluency_threshold > 0.0 && breakpoint_tolerance > 0.0 &&
        cluster_eps > 0.0 && node_radius > 0.0 && max_step > 0.0)) {
    throw InvalidArgument("lane graph: radii and thresholds must be positive");
  }
  if (cluster_min_pts < 1 || smoothing_window < 1) {
    throw InvalidArgument("lane graph: cluster_min_pts and smoothing_window must be >= 1");
  }
}

double polyline_length(std::span<const Vec2> polyline) {
  double len = 0.0;
  for (std::size_t i = 1; i < polyline.size(); ++i) len += (polyline[i] - polyline[i - 1]).norm();
  return len;
}

double point_polyline_distance(const Vec2& p, std::span<const Vec2> polyline) {
  if (polyline.empty()) return std::numeric_limits<double>::infinity();
  double best = (p - polyline.front()).norm();
  for (std::size_t i = 1; i < polyline.size(); ++i) {
    const Vec2 a = polyline[i - 1];
    const Vec2 ab = polyline[i] - a;
    const double len2 = ab.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    best = std::min(best, (p - (a + t * ab)).norm());
  }
  return best;
}

Points2 project_trajectory(std::span<const ingest::Pose> poses) {
  Points2 out;
  for (const ingest::Pose& pose : poses) {
    const Vec3 t = pose.translation();
    const Vec2 p(t.x(), t.y());
    if (!out.empty() && (p - out.back()).norm() < 0.01) continue;
    out.push_back(p);
  }
  if (out.size() < 2) {
    throw InvalidArgument("project_trajectory: fewer than two distinct positions");
  }
  return out;
}

Disfluency disfluency_of(std::span<const Vec2> vectors) {
  Disfluency d;
  d.neighbor_count = vectors.size();
  if (vectors.size() < 2) return d;
  double folded = 0.0;
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    for (std::size_t j = i + 1; j < vectors.size(); ++j) {
      const double c = vectors[i].dot(vectors[j]) / (vectors[i].norm() * vectors[j].norm());
      const double theta = std::acos(std::clamp(c, -1.0, 1.0));
      folded += std::min(std::abs(theta), std::abs(theta - std::numbers::pi));
      total += theta;
      ++pairs;
    }
  }
  d.defined = true;
  d.lambda = folded / static_cast<double>(pairs);
  d.mean_theta = total / static_cast<double>(pairs);
  return d;
}

namespace {

Points2 neighbor_vectors(std::span<const Vec2> points, std::size_t n,
                         std::span<const std::size_t> candidates, double radius) {
  Points2 vectors;
  for (std::size_t m : candidates) {
    if (m == n) continue;
    const Vec2 v = points[m] - points[n];
    const double len = v.norm();
    if (len < radius && len > 0.0) vectors.push_back(v);
  }
  return vectors;
}

/// Ends within one step of each other on a path longer than two steps.
bool is_closed(std::span<const Vec2> piece, double max_step) {
  return piece.size() > 2 && (piece.back() - piece.front()).norm() <= max_step &&
         polyline_length(piece) > 2 * max_step;
}

Points2 smooth(std::span<const Vec2> points, std::span<const std::pair<std::size_t, std::size_t>> pieces,
               std::size_t window, double max_step) {
  Points2 out(points.begin(), points.end());
  if (window <= 1) return out;
  const std::size_t half = window / 2;
  for (auto [begin, end] : pieces) {
    const std::size_t len = end - begin;
    // A piece whose ends meet is a loop; its window wraps around the seam.
    const bool closed = len > window && is_closed(points.subspan(begin, len), max_step);
    for (std::size_t i = begin; i < end; ++i) {
      Vec2 sum = Vec2::Zero();
      std::size_t count = 0;
      if (closed) {
        for (std::size_t k = 0; k < 2 * half + 1; ++k) {
          sum += points[begin + (i - begin + len + k - half) % len];
          ++count;
        }
      } else {
        const std::size_t lo = i >= begin + half ? i - half : begin;
        const std::size_t hi = std::min(end, i + half + 1);
        for (std::size_t k = lo; k < hi; ++k) sum += points[k];
        count = hi - lo;
      }
      out[i] = sum / static_cast<double>(count);
    }
  }
  return out;
}

Vec2 centroid_of(std::span<const Vec2> points, std::span<const std::size_t> members) {
  Vec2 sum = Vec2::Zero();
  for (std::size_t i : members) sum += points[i];
  return sum / static_cast<double>(members.size());
}

std::vector<std::vector<std::size_t>> cluster(std::span<const Vec2> points,
                                              const std::vector<std::size_t>& subset, double eps,
                                              std::size_t min_pts) {
  Points2 sub;
  sub.reserve(subset.size());
  for (std::size_t i : subset) sub.push_back(points[i]);
  const std::vector<int> labels = geom::dbscan<2>(sub, eps, min_pts);
  std::vector<std::vector<std::size_t>> clusters;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] == geom::kNoise) continue;
    const auto c = static_cast<std::size_t>(labels[k]);
    if (clusters.size() <= c) clusters.resize(c + 1);
    clusters[c].push_back(subset[k]);
  }
  return clusters;
}

}  // namespace

Disfluency local_disfluency(std::span<const Vec2> points, std::size_t n, const DisfluencyConfig& cfg) {
  if (n >= points.size()) throw InvalidArgument("local_disfluency: index out of range");
  std::vector<std::size_t> all(points.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return disfluency_of(neighbor_vectors(points, n, all, cfg.radius));
}

std::vector<std::pair<std::size_t, std::size_t>> split_pieces(std::span<const Vec2> points,
                                                              double max_step) {
  std::vector<std::pair<std::size_t, std::size_t>> pieces;
  std::size_t begin = 0;
  for (std::size_t i = 1; i <= points.size(); ++i) {
    if (i == points.size() || (points[i] - points[i - 1]).norm() > max_step) {
      if (i > begin) pieces.emplace_back(begin, i);
      begin = i;
    }
  }
  return pieces;
}

std::vector<LaneNode> detect_nodes(std::span<const Vec2> points, const DisfluencyConfig& cfg) {
  cfg.validate();
  const auto pieces = split_pieces(points, cfg.max_step);
  const Points2 smoothed = smooth(points, pieces, cfg.smoothing_window, cfg.max_step);
  const geom::GridIndex<2> grid(smoothed, cfg.radius);

  std::vector<std::size_t> high, flat_ends;
  for (std::size_t n = 0; n < smoothed.size(); ++n) {
    const auto near = grid.within(smoothed[n], cfg.radius);
    const Disfluency d = disfluency_of(neighbor_vectors(smoothed, n, near, cfg.radius));
    if (!d.defined) continue;
    if (d.lambda > cfg.disfluency_threshold) high.push_back(n);
    if (d.mean_theta < cfg.breakpoint_tolerance) flat_ends.push_back(n);
  }

  std::vector<LaneNode> nodes;
  for (auto& members : cluster(smoothed, high, cfg.cluster_eps, cfg.cluster_min_pts)) {
    LaneNode node;
    node.position = centroid_of(points, members);
    node.kind = NodeKind::l_intersection;
    node.interior = true;
    node.members = std::move(members);
    nodes.push_back(std::move(node));
  }
  const std::size_t interior_count = nodes.size();
  for (auto& members : cluster(smoothed, flat_ends, cfg.cluster_eps, 1)) {
    const Vec2 pos = centroid_of(points, members);
    bool absorbed = false;
    for (std::size_t k = 0; k < interior_count; ++k) {
      if ((nodes[k].position - pos).norm() < cfg.node_radius) absorbed = true;
    }
    if (absorbed) continue;
    LaneNode node;
    node.position = pos;
    node.kind = NodeKind::breakpoint;
    node.members = std::move(members);
    nodes.push_back(std::move(node));
  }
  return nodes;
}

LaneGraph build_lane_graph(std::span<const Vec2> points, std::vector<LaneNode> nodes,
                           const DisfluencyConfig& cfg) {
  cfg.validate();
  LaneGraph graph;
  const auto pieces = split_pieces(points, cfg.max_step);

  if (nodes.empty()) {
    const bool closed = pieces.size() == 1 && is_closed(points, cfg.max_step);
    if (!closed) throw InvalidArgument("build_lane_graph: no nodes on an open trajectory");
    LaneNode node;
    node.position = points.front();
    node.kind = NodeKind::breakpoint;
    node.members = {0};
    graph.nodes.push_back(std::move(node));
    LaneEdge loop;
    loop.polyline.assign(points.begin(), points.end());
    loop.polyline.push_back(points.front());
    loop.length = polyline_length(loop.polyline);
    graph.edges.push_back(std::move(loop));
    return graph;
  }

  constexpr std::size_t kRoad = static_cast<std::size_t>(-1);
  std::vector<std::size_t> owner(points.size(), kRoad);
  for (std::size_t i = 0; i < points.size(); ++i) {
    double best = cfg.node_radius;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const double d = (points[i] - nodes[k].position).norm();
      if (d <= best && (owner[i] == kRoad || d < best)) {
        best = d;
        owner[i] = k;
      }
    }
  }

  for (LaneNode& n : nodes) n.sections.clear();
  std::map<std::pair<std::size_t, std::size_t>, LaneEdge> unique;
  for (auto [begin, end] : pieces) {
    std::size_t prev = kRoad;
    std::size_t prev_idx = 0;
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t o = owner[i];
      if (o != kRoad) {
        if (i == begin || owner[i - 1] != o) nodes[o].sections.emplace_back();
        nodes[o].sections.back().push_back(points[i]);
      }
      if (o == kRoad) continue;
      if (prev != kRoad && o != prev) {
        LaneEdge e;
        e.a = prev;
        e.b = o;
        e.polyline.push_back(nodes[prev].position);
        for (std::size_t k = prev_idx; k <= i; ++k) e.polyline.push_back(points[k]);
        e.polyline.push_back(nodes[o].position);
        if (e.a > e.b) {
          std::swap(e.a, e.b);
          std::reverse(e.polyline.begin(), e.polyline.end());
        }
        e.length = polyline_length(e.polyline);
        const auto key = std::make_pair(e.a, e.b);
        auto it = unique.find(key);
        if (it == unique.end() || e.length < it->second.length) unique[key] = std::move(e);
      }
      prev = o;
      prev_idx = i;
    }
  }
  for (auto& [key, e] : unique) graph.edges.push_back(std::move(e));
  graph.nodes = std::move(nodes);

  for (std::size_t k = 0; k < graph.nodes.size(); ++k) {
    const std::size_t deg = graph.degree(k);
    LaneNode& n = graph.nodes[k];
    if (deg >= 4) {
      n.kind = NodeKind::intersection;
    } else if (deg == 3) {
      n.kind = NodeKind::t_intersection;
    } else if (deg == 2 && n.interior) {
      n.kind = NodeKind::l_intersection;
    } else {
      n.kind = NodeKind::breakpoint;
    }
  }
  return graph;
}

LaneGraph extract_lane_graph(std::span<const ingest::Pose> poses, const DisfluencyConfig& cfg) {
  const Points2 points = project_trajectory(poses);
  return build_lane_graph(points, detect_nodes(points, cfg), cfg);
}

}  // namespace opengraph::lanes
