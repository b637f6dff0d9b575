#include "opengraph/geom.hpp"

#include "oracles.hpp"
#include "support.hpp"

#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>

using namespace opengraph;
using namespace opengraph::geom;
using namespace testing;

namespace {

AxisAlignedBox box(Vec3 lo, Vec3 hi) { return {lo, hi}; }

}  // namespace

TEST_CASE("aabb_iou") {
  const auto unit = box({0, 0, 0}, {1, 1, 1});
  CHECK(aabb_iou(unit, unit) == 1.0);
  CHECK(aabb_iou(unit, box({0.5, 0, 0}, {1.5, 1, 1})) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(aabb_iou(unit, box({2, 2, 2}, {3, 3, 3})) == 0.0);

  // Symmetric, and a flat box still overlaps its twin.
  const auto a = box({0, 0, 0}, {2, 1, 0.5});
  const auto b = box({1, 0.5, 0.1}, {3, 2, 0.4});
  CHECK(aabb_iou(a, b) == aabb_iou(b, a));
  const auto plane = box({0, 0, 1}, {1, 1, 1});
  CHECK(aabb_iou(plane, plane) == 1.0);
  CHECK(aabb_iou(plane, box({0, 0, 1.02}, {1, 1, 1.02})) == 0.0);
}

TEST_CASE("aabb_gap") {
  const auto unit = box({0, 0, 0}, {1, 1, 1});
  CHECK(aabb_gap(unit, box({0.5, 0.5, 0.5}, {2, 2, 2})) == 0.0);
  CHECK(aabb_gap(unit, box({4, 0, 0}, {5, 1, 1})) == doctest::Approx(3.0));
  CHECK(aabb_gap(unit, box({4, 5, 0}, {5, 6, 1})) == doctest::Approx(5.0));
}

TEST_CASE("cosine_similarity") {
  CHECK(cosine_similarity(Vec2(1, 0), Vec2(1, 0)) == 1.0);
  CHECK(cosine_similarity(Vec2(1, 0), Vec2(0, 1)) == 0.0);
  CHECK(cosine_similarity(Vec2(1, 0), Vec2(1, 1)) == doctest::Approx(0.70710678).epsilon(1e-9));
  CHECK_THROWS_AS(cosine_similarity(Vec2(0, 0), Vec2(1, 1)), InvalidArgument);
  CHECK_THROWS_AS(cosine_similarity(Eigen::VectorXd::Ones(3), Eigen::VectorXd::Ones(4)), InvalidArgument);

  Eigen::VectorXd v(5);
  v << 0.3, -1.7, 2.2, 0.01, 9.0;
  CHECK(cosine_similarity(v, v) == 1.0);
}

TEST_CASE("dbscan worked examples") {
  using P1 = Eigen::Matrix<double, 1, 1>;
  const std::vector<P1> line{P1(0.0), P1(0.1), P1(10.0)};
  CHECK(dbscan<1>(line, 1.0, 2) == std::vector<int>{0, 0, kNoise});
  const std::vector<P1> single{P1(3.0)};
  CHECK(dbscan<1>(single, 1.0, 1) == std::vector<int>{0});
  const std::vector<Vec3> same(5, Vec3(1, 2, 3));
  CHECK(dbscan<3>(same, 0.1, 5) == std::vector<int>(5, 0));
  CHECK(dbscan<3>(std::span<const Vec3>{}, 1.0, 1).empty());
  CHECK_THROWS_AS(dbscan<3>(same, 0.0, 1), InvalidArgument);
  CHECK_THROWS_AS(dbscan<3>(same, 1.0, 0), InvalidArgument);
}

TEST_CASE("dbscan matches the reachability oracle") {
  std::mt19937 rng(1234);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(0, 200)(rng);
    std::uniform_real_distribution<double> coord(0.0, 10.0);
    // Quantised coordinates create many exact-eps distances.
    const bool grid = trial % 3 == 0;
    std::vector<Vec2> pts;
    for (std::size_t i = 0; i < n; ++i) {
      Vec2 p(coord(rng), coord(rng));
      if (grid) p = (p * 2).array().round() / 2;
      pts.push_back(p);
    }
    const double eps = grid ? 0.5 : std::uniform_real_distribution<double>(0.2, 1.5)(rng);
    const std::size_t min_pts = std::uniform_int_distribution<std::size_t>(1, 6)(rng);
    CHECK(dbscan<2>(pts, eps, min_pts) == dbscan_oracle<2>(pts, eps, min_pts));
  }
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 200)(rng);
    std::uniform_real_distribution<double> coord(0.0, 4.0);
    std::vector<Vec3> pts;
    for (std::size_t i = 0; i < n; ++i) pts.emplace_back(coord(rng), coord(rng), coord(rng));
    const double eps = std::uniform_real_distribution<double>(0.3, 1.0)(rng);
    const std::size_t min_pts = std::uniform_int_distribution<std::size_t>(1, 8)(rng);
    CHECK(dbscan<3>(pts, eps, min_pts) == dbscan_oracle<3>(pts, eps, min_pts));
  }
}

TEST_CASE("dbscan is permutation invariant up to relabelling") {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> coord(0.0, 6.0);
  std::vector<Vec2> pts;
  for (int i = 0; i < 150; ++i) pts.emplace_back(coord(rng), coord(rng));
  const auto base = dbscan<2>(pts, 0.6, 3);
  std::vector<std::size_t> order(pts.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Vec2> shuffled;
  for (std::size_t i : order) shuffled.push_back(pts[i]);
  const auto labels = dbscan<2>(shuffled, 0.6, 3);
  // Core membership and noise must agree; border points may switch cluster.
  std::vector<std::size_t> neighbours(pts.size(), 0);
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = 0; j < pts.size(); ++j) neighbours[i] += (pts[i] - pts[j]).norm() <= 0.6;
  std::map<int, int> mapping;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const int a = base[order[k]];
    const int b = labels[k];
    CHECK((a == kNoise) == (b == kNoise));
    if (a == kNoise || neighbours[order[k]] < 3) continue;
    const auto [it, fresh] = mapping.emplace(a, b);
    CHECK(it->second == b);
  }
}

TEST_CASE("voxel_downsample") {
  CHECK(voxel_downsample(std::vector<Vec3>{{0.01, 0.01, 0.01}, {0.05, 0.03, 0.02}}, 0.2).size() == 1);
  std::vector<Vec3> grid;
  for (int x = 0; x < 4; ++x)
    for (int y = 0; y < 3; ++y) grid.emplace_back(x, y, 0);
  CHECK(voxel_downsample(grid, 0.2).size() == grid.size());

  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0.0, 0.999);
  std::vector<Vec3> cube;
  for (int i = 0; i < 1000; ++i) cube.emplace_back(u(rng), u(rng), u(rng));
  const auto one = voxel_downsample(cube, 1.0);
  REQUIRE(one.size() == 1);
  Vec3 mean = Vec3::Zero();
  for (const auto& p : cube) mean += p;
  CHECK((one[0] - mean / 1000.0).norm() < 1e-12);

  const auto pair = voxel_downsample(std::vector<Vec3>{{1.5, 0, 0}, {0.5, 0, 0}}, 1.0);
  REQUIRE(pair.size() == 2);
  CHECK(pair[0].x() == 0.5);
  CHECK_THROWS_AS(voxel_downsample(grid, 0.0), InvalidArgument);
}

TEST_CASE("minimum spanning tree examples") {
  WeightedGraph tri(3);
  tri.add_edge(0, 1, 1);
  tri.add_edge(1, 2, 2);
  tri.add_edge(0, 2, 3);
  const auto t = minimum_spanning_tree(tri);
  REQUIRE(t.size() == 2);
  CHECK(t[0] == WeightedEdge{0, 1, 1});
  CHECK(t[1] == WeightedEdge{1, 2, 2});

  WeightedGraph two(2);
  two.add_edge(1, 0, 4);
  CHECK(minimum_spanning_tree(two) == std::vector<WeightedEdge>{{0, 1, 4}});

  WeightedGraph split(4);
  split.add_edge(0, 1, 1);
  split.add_edge(2, 3, 1);
  CHECK_THROWS_AS(minimum_spanning_tree(split), InvalidArgument);
  CHECK_THROWS_AS(tri.add_edge(2, 0, 1), InvalidArgument);
  CHECK_THROWS_AS(tri.add_edge(1, 1, 1), InvalidArgument);
}

TEST_CASE("minimum spanning tree matches exhaustive enumeration") {
  std::mt19937 rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(2, 6)(rng);
    const WeightedGraph g = random_graph(rng, n, 0.5, true);
    const auto tree = minimum_spanning_tree(g);
    CHECK(tree.size() == n - 1);
    double total = 0.0;
    for (const auto& e : tree) total += e.weight;
    CHECK(total == spanning_oracle(n, g.edges()));

    // The dense variant on the completed graph picks the same edges.
    std::vector<std::vector<double>> w(n, std::vector<double>(n, 100.0));
    WeightedGraph complete(n);
    for (const auto& e : g.edges()) w[e.u][e.v] = e.weight;
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t v = u + 1; v < n; ++v) complete.add_edge(u, v, w[u][v]);
    const auto dense = dense_minimum_spanning_tree(n, [&](std::size_t i, std::size_t j) { return w[i][j]; });
    CHECK(dense == minimum_spanning_tree(complete));
  }
}

TEST_CASE("shortest path examples") {
  WeightedGraph tri(3);
  tri.add_edge(0, 1, 1);
  tri.add_edge(1, 2, 1);
  tri.add_edge(0, 2, 3);
  const auto p = shortest_path(tri, 0, 2);
  CHECK(p.found);
  CHECK(p.nodes == std::vector<std::size_t>{0, 1, 2});
  CHECK(p.cost == 2.0);

  const auto self = shortest_path(tri, 1, 1);
  CHECK(self.found);
  CHECK(self.nodes == std::vector<std::size_t>{1});
  CHECK(self.cost == 0.0);

  WeightedGraph apart(4);
  apart.add_edge(0, 1, 1);
  apart.add_edge(2, 3, 1);
  CHECK_FALSE(shortest_path(apart, 0, 3).found);
  CHECK_THROWS_AS(shortest_path(apart, 0, 9), InvalidArgument);
}

TEST_CASE("shortest path matches path enumeration") {
  std::mt19937 rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(2, 8)(rng);
    const WeightedGraph g = random_graph(rng, n, 0.35, trial % 4 != 0);
    const std::size_t s = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    const std::size_t d = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    const auto got = shortest_path(g, s, d);
    const auto want = path_oracle(g, s, d);
    REQUIRE(got.found == want.found);
    if (!want.found) continue;
    CHECK(got.cost == want.cost);
    CHECK(got.nodes == want.nodes);
  }
}

TEST_CASE("grid index agrees with a linear scan") {
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::vector<Vec3> pts;
  for (int i = 0; i < 400; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
  pts.push_back(pts[10]);
  const GridIndex<3> index(pts, 1.0);
  for (int q = 0; q < 100; ++q) {
    const Vec3 c(u(rng), u(rng), u(rng));
    std::vector<std::size_t> want;
    std::optional<std::size_t> nearest;
    double best = 2.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double d = (pts[i] - c).norm();
      if (d <= 1.0) want.push_back(i);
      if (d <= 1.0 && d < best) {
        best = d;
        nearest = i;
      }
    }
    CHECK(index.within(c, 1.0) == want);
    CHECK(index.nearest(c, 1.0) == nearest);
  }
  CHECK(index.nearest(pts[10], 0.5) == std::optional<std::size_t>(10));
}
