#pragma once

#include "opengraph/geom.hpp"

#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <vector>

namespace testing {

using opengraph::geom::kNoise;
using opengraph::geom::PathResult;
using opengraph::geom::WeightedEdge;
using opengraph::geom::WeightedGraph;

// Density reachability from first principles: cores are linked when within
// eps of each other, borders take the smallest label among their cores.
template <int Dim>
inline std::vector<int> dbscan_oracle(const std::vector<Eigen::Matrix<double, Dim, 1>>& pts, double eps,
                               std::size_t min_pts) {
  const std::size_t n = pts.size();
  std::vector<std::vector<std::size_t>> nbr(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if ((pts[i] - pts[j]).norm() <= eps) nbr[i].push_back(j);
  std::vector<bool> core(n);
  for (std::size_t i = 0; i < n; ++i) core[i] = nbr[i].size() >= min_pts;

  std::vector<int> comp(n, -1);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i] || comp[i] >= 0) continue;
    std::vector<std::size_t> stack{i};
    comp[i] = next;
    while (!stack.empty()) {
      const std::size_t c = stack.back();
      stack.pop_back();
      for (std::size_t j : nbr[c]) {
        if (core[j] && comp[j] < 0) {
          comp[j] = next;
          stack.push_back(j);
        }
      }
    }
    ++next;
  }
  std::vector<int> out(n, kNoise);
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) {
      out[i] = comp[i];
      continue;
    }
    for (std::size_t j : nbr[i]) {
      if (core[j] && (out[i] == kNoise || comp[j] < out[i])) out[i] = comp[j];
    }
  }
  return out;
}

inline double spanning_oracle(std::size_t n, const std::vector<WeightedEdge>& edges) {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t m = edges.size();
  std::vector<std::size_t> pick(n - 1);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t start, std::size_t depth) {
    if (depth == n - 1) {
      std::vector<std::size_t> parent(n);
      std::iota(parent.begin(), parent.end(), 0);
      std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
        return parent[x] == x ? x : parent[x] = find(parent[x]);
      };
      double w = 0.0;
      for (std::size_t k : pick) {
        const auto a = find(edges[k].u), b = find(edges[k].v);
        if (a == b) return;
        parent[a] = b;
        w += edges[k].weight;
      }
      best = std::min(best, w);
      return;
    }
    for (std::size_t k = start; k < m; ++k) {
      pick[depth] = k;
      rec(k + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

inline PathResult path_oracle(const WeightedGraph& g, std::size_t src, std::size_t dst) {
  const std::size_t n = g.node_count();
  std::vector<std::vector<double>> w(n, std::vector<double>(n, -1.0));
  for (const auto& e : g.edges()) w[e.u][e.v] = w[e.v][e.u] = e.weight;
  PathResult best;
  std::vector<std::size_t> path{src};
  std::vector<bool> seen(n, false);
  seen[src] = true;
  std::function<void(std::size_t, double)> dfs = [&](std::size_t at, double cost) {
    if (at == dst) {
      if (!best.found || cost < best.cost || (cost == best.cost && path < best.nodes)) {
        best.found = true;
        best.cost = cost;
        best.nodes = path;
      }
      return;
    }
    for (std::size_t v = 0; v < n; ++v) {
      if (w[at][v] < 0 || seen[v]) continue;
      seen[v] = true;
      path.push_back(v);
      dfs(v, cost + w[at][v]);
      path.pop_back();
      seen[v] = false;
    }
  };
  dfs(src, 0.0);
  return best;
}

inline WeightedGraph random_graph(std::mt19937& rng, std::size_t n, double density, bool connect) {
  WeightedGraph g(n);
  std::uniform_int_distribution<int> weight(0, 9);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::set<std::pair<std::size_t, std::size_t>> have;
  if (connect) {
    for (std::size_t v = 1; v < n; ++v) {
      const std::size_t u = std::uniform_int_distribution<std::size_t>(0, v - 1)(rng);
      g.add_edge(u, v, weight(rng));
      have.insert({u, v});
    }
  }
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v)
      if (!have.count({u, v}) && coin(rng) < density) g.add_edge(u, v, weight(rng));
  return g;
}

}  // namespace testing
