#include "opengraph/geom.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <queue>
#include <sstream>
#include <string>

namespace opengraph::geom {

AxisAlignedBox AxisAlignedBox::from_points(std::span<const Vec3> points) {
  if (points.empty()) {
    throw InvalidArgument("AxisAlignedBox::from_points: empty point set");
  }
  AxisAlignedBox box{points.front(), points.front()};
  for (const Vec3& p : points.subspan(1)) {
    box.min = box.min.cwiseMin(p);
    box.max = box.max.cwiseMax(p);
  }
  return box;
}

double AxisAlignedBox::volume() const {
  const Vec3 e = extent().cwiseMax(0.0);
  return e.x() * e.y() * e.z();
}

namespace {

AxisAlignedBox with_extent_floor(AxisAlignedBox box) {
  for (int axis = 0; axis < 3; ++axis) {
    if (box.max[axis] - box.min[axis] < kBoxExtentFloor) {
      const double c = 0.5 * (box.min[axis] + box.max[axis]);
      box.min[axis] = c - 0.5 * kBoxExtentFloor;
      box.max[axis] = c + 0.5 * kBoxExtentFloor;
    }
  }
  return box;
}

}  // namespace

double aabb_iou(const AxisAlignedBox& a_in, const AxisAlignedBox& b_in) {
  const AxisAlignedBox a = with_extent_floor(a_in);
  const AxisAlignedBox b = with_extent_floor(b_in);
  const Vec3 lo = a.min.cwiseMax(b.min);
  const Vec3 hi = a.max.cwiseMin(b.max);
  const Vec3 overlap = (hi - lo).cwiseMax(0.0);
  const double inter = overlap.x() * overlap.y() * overlap.z();
  if (inter <= 0.0) return 0.0;
  const double uni = a.volume() + b.volume() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double aabb_gap(const AxisAlignedBox& a, const AxisAlignedBox& b) {
  const Vec3 gap = (a.min - b.max).cwiseMax(b.min - a.max).cwiseMax(0.0);
  return gap.norm();
}

// ---------------------------------------------------------------------------
// Grid index

namespace {

template <int Dim>
std::array<std::int64_t, Dim> cell_of(const Eigen::Matrix<double, Dim, 1>& p, double cell) {
  std::array<std::int64_t, Dim> key{};
  for (int i = 0; i < Dim; ++i) {
    key[i] = static_cast<std::int64_t>(std::floor(p[i] / cell));
  }
  return key;
}

}  // namespace

template <int Dim>
GridIndex<Dim>::GridIndex(std::span<const Point> points, double cell)
    : points_(points), cell_(cell) {
  if (!(cell > 0.0)) throw InvalidArgument("GridIndex: cell size must be positive");
  sorted_.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    sorted_.emplace_back(cell_of<Dim>(points[i], cell_), i);
  }
  std::sort(sorted_.begin(), sorted_.end());
}

template <int Dim>
template <typename Fn>
void GridIndex<Dim>::visit_cells(const Point& query, Fn&& fn) const {
  const auto center = cell_of<Dim>(query, cell_);
  std::array<std::int64_t, Dim> offset;
  offset.fill(-1);
  while (true) {
    std::array<std::int64_t, Dim> key;
    for (int i = 0; i < Dim; ++i) key[i] = center[i] + offset[i];
    auto lo = std::lower_bound(sorted_.begin(), sorted_.end(), key,
                               [](const auto& e, const auto& k) { return e.first < k; });
    for (auto it = lo; it != sorted_.end() && it->first == key; ++it) fn(it->second);

    int i = 0;
    while (i < Dim && offset[i] == 1) offset[i++] = -1;
    if (i == Dim) break;
    ++offset[i];
  }
}

template <int Dim>
std::vector<std::size_t> GridIndex<Dim>::within(const Point& query, double radius) const {
  std::vector<std::size_t> out;
  const double r2 = radius * radius;
  visit_cells(query, [&](std::size_t idx) {
    if ((points_[idx] - query).squaredNorm() <= r2) out.push_back(idx);
  });
  std::sort(out.begin(), out.end());
  return out;
}

template <int Dim>
std::optional<std::size_t> GridIndex<Dim>::nearest(const Point& query, double radius) const {
  std::optional<std::size_t> best;
  double best_d2 = radius * radius;
  visit_cells(query, [&](std::size_t idx) {
    const double d2 = (points_[idx] - query).squaredNorm();
    if (d2 < best_d2 || (d2 == best_d2 && (!best || idx < *best))) {
      best = idx;
      best_d2 = d2;
    }
  });
  return best;
}

template class GridIndex<1>;
template class GridIndex<2>;
template class GridIndex<3>;

// ---------------------------------------------------------------------------
// DBSCAN

template <int Dim>
std::vector<int> dbscan(std::span<const Eigen::Matrix<double, Dim, 1>> points, double eps,
                        std::size_t min_pts) {
  if (!(eps > 0.0)) throw InvalidArgument("dbscan: eps must be positive");
  if (min_pts < 1) throw InvalidArgument("dbscan: min_pts must be >= 1");

  const std::size_t n = points.size();
  constexpr int kUnassigned = -2;
  std::vector<int> labels(n, kUnassigned);
  if (n == 0) return labels;

  const GridIndex<Dim> grid(points, eps);
  std::vector<bool> core(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    core[i] = grid.within(points[i], eps).size() >= min_pts;
  }

  int cluster = 0;
  std::deque<std::size_t> frontier;
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i] || labels[i] != kUnassigned) continue;
    labels[i] = cluster;
    frontier.push_back(i);
    while (!frontier.empty()) {
      const std::size_t p = frontier.front();
      frontier.pop_front();
      for (std::size_t q : grid.within(points[p], eps)) {
        if (labels[q] != kUnassigned) continue;
        labels[q] = cluster;
        if (core[q]) frontier.push_back(q);
      }
    }
    ++cluster;
  }
  for (int& l : labels) {
    if (l == kUnassigned) l = kNoise;
  }
  return labels;
}

template std::vector<int> dbscan<1>(std::span<const Eigen::Matrix<double, 1, 1>>, double,
                                    std::size_t);
template std::vector<int> dbscan<2>(std::span<const Eigen::Matrix<double, 2, 1>>, double,
                                    std::size_t);
template std::vector<int> dbscan<3>(std::span<const Eigen::Matrix<double, 3, 1>>, double,
                                    std::size_t);

// ---------------------------------------------------------------------------

Points3 voxel_downsample(std::span<const Vec3> points, double voxel) {
  if (!(voxel > 0.0)) throw InvalidArgument("voxel_downsample: voxel must be positive");
  std::vector<std::pair<std::array<std::int64_t, 3>, std::size_t>> keyed;
  keyed.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    keyed.emplace_back(cell_of<3>(points[i], voxel), i);
  }
  std::sort(keyed.begin(), keyed.end());

  Points3 out;
  for (std::size_t begin = 0; begin < keyed.size();) {
    std::size_t end = begin;
    Vec3 sum = Vec3::Zero();
    while (end < keyed.size() && keyed[end].first == keyed[begin].first) {
      sum += points[keyed[end].second];
      ++end;
    }
    out.push_back(sum / static_cast<double>(end - begin));
    begin = end;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Graphs

void WeightedGraph::add_edge(std::size_t u, std::size_t v, double weight) {
  if (u >= node_count_ || v >= node_count_) {
    throw InvalidArgument("WeightedGraph::add_edge: node out of range");
  }
  if (u == v) throw InvalidArgument("WeightedGraph::add_edge: self loop");
  if (!(weight >= 0.0) || !std::isfinite(weight)) {
    throw InvalidArgument("WeightedGraph::add_edge: weight must be finite and >= 0");
  }
  if (u > v) std::swap(u, v);
  for (const WeightedEdge& e : edges_) {
    if (e.u == u && e.v == v) {
      throw InvalidArgument("WeightedGraph::add_edge: duplicate edge");
    }
  }
  edges_.push_back({u, v, weight});
}

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

std::vector<WeightedEdge> minimum_spanning_tree(const WeightedGraph& graph) {
  const std::size_t n = graph.node_count();
  std::vector<WeightedEdge> edges = graph.edges();
  std::sort(edges.begin(), edges.end(), [](const WeightedEdge& a, const WeightedEdge& b) {
    if (a.weight != b.weight) return a.weight < b.weight;
    if (a.u != b.u) return a.u < b.u;
    return a.v < b.v;
  });

  DisjointSets sets(n);
  std::vector<WeightedEdge> tree;
  for (const WeightedEdge& e : edges) {
    if (sets.unite(e.u, e.v)) tree.push_back(e);
  }
  if (n > 0 && tree.size() != n - 1) {
    std::vector<std::vector<std::size_t>> components(n);
    for (std::size_t i = 0; i < n; ++i) components[sets.find(i)].push_back(i);
    std::ostringstream msg;
    msg << "minimum_spanning_tree: graph is disconnected; components:";
    for (const auto& c : components) {
      if (c.empty()) continue;
      msg << " {";
      for (std::size_t k = 0; k < c.size(); ++k) msg << (k ? "," : "") << c[k];
      msg << "}";
    }
    throw InvalidArgument(msg.str());
  }
  return tree;
}

PathResult shortest_path(const WeightedGraph& graph, std::size_t src, std::size_t dst) {
  const std::size_t n = graph.node_count();
  if (src >= n || dst >= n) throw InvalidArgument("shortest_path: node out of range");

  std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
  for (const WeightedEdge& e : graph.edges()) {
    adj[e.u].emplace_back(e.v, e.weight);
    adj[e.v].emplace_back(e.u, e.weight);
  }
  for (auto& list : adj) std::sort(list.begin(), list.end());

  // Distances to dst, so the forward walk can pick the smallest feasible hop.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> to_dst(n, inf);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  to_dst[dst] = 0.0;
  heap.emplace(0.0, dst);
  while (!heap.empty()) {
    auto [d, x] = heap.top();
    heap.pop();
    if (d > to_dst[x]) continue;
    for (auto [y, w] : adj[x]) {
      if (d + w < to_dst[y]) {
        to_dst[y] = d + w;
        heap.emplace(to_dst[y], y);
      }
    }
  }

  PathResult result;
  if (to_dst[src] == inf) return result;

  // Depth-first over tight edges in ascending neighbour order. With positive
  // weights the tight edges form a DAG and the walk never backtracks; zero
  // weights can create tight cycles, which the visited set cuts.
  auto tight = [&](std::size_t x, std::size_t y, double w) {
    return w + to_dst[y] <= to_dst[x] + 1e-9 * std::max(1.0, to_dst[x]);
  };
  std::vector<bool> visited(n, false);
  std::vector<std::size_t> next_slot{0};
  result.nodes.push_back(src);
  visited[src] = true;
  while (result.nodes.back() != dst) {
    const std::size_t cur = result.nodes.back();
    std::size_t& slot = next_slot.back();
    bool advanced = false;
    while (slot < adj[cur].size()) {
      auto [y, w] = adj[cur][slot++];
      if (visited[y] || !tight(cur, y, w)) continue;
      visited[y] = true;
      result.nodes.push_back(y);
      next_slot.push_back(0);
      advanced = true;
      break;
    }
    if (advanced) continue;
    visited[cur] = false;
    result.nodes.pop_back();
    next_slot.pop_back();
    if (result.nodes.empty()) throw Error("shortest_path: inconsistent distance labels");
  }
  for (std::size_t i = 1; i < result.nodes.size(); ++i) {
    const std::size_t a = result.nodes[i - 1], b = result.nodes[i];
    for (auto [y, w] : adj[a]) {
      if (y == b) {
        result.cost += w;
        break;
      }
    }
  }
  result.found = true;
  return result;
}

}  // namespace opengraph::geom
