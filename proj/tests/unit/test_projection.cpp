#include "opengraph/projection.hpp"
#include "opengraph/geom.hpp"

#include "support.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <random>

using namespace opengraph;
using namespace opengraph::projection;
using ingest::Bitmask;
using ingest::PointCloud;
using ingest::Pose;
using ingest::SensorCalibration;

namespace {

/// Camera frame equals the LiDAR frame.
SensorCalibration pinhole(double f, double cx, double cy, int w, int h) {
  SensorCalibration c;
  c.image_width = w;
  c.image_height = h;
  c.camera_projection << f, 0, cx, 0, 0, f, cy, 0, 0, 0, 1, 0;
  c.lidar_to_camera.setIdentity();
  return c;
}

/// Forward-looking LiDAR (x ahead, z up) mounted with a small offset.
SensorCalibration vehicle_camera() {
  SensorCalibration c = pinhole(300, 600, 200, 1200, 400);
  c.lidar_to_camera << 0, -1, 0, 0.05, 0, 0, -1, -0.1, 1, 0, 0, 0.2, 0, 0, 0, 1;
  return c;
}

Points3 sorted(Points3 p) {
  std::sort(p.begin(), p.end(), [](const Vec3& a, const Vec3& b) {
    return std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3);
  });
  return p;
}

}  // namespace

TEST_CASE("project_point worked examples") {
  const auto calib = pinhole(100, 50, 50, 120, 120);
  CHECK(project_point(Vec3(0, 0, 2), calib) == Pixel{50, 50});
  const auto p = project_point(Vec3(1, 0, 2), calib);
  REQUIRE(p);
  CHECK(p->u == 100);
  CHECK(p->v == 50);
  CHECK(!project_point(Vec3(0, 0, -1), calib));
  CHECK(!project_point(Vec3(0, 0, 0), calib));
  CHECK(!project_point(Vec3(10, 0, 2), calib));  // u = 550, off-image
  // Nearest-integer rounding: 100 * 0.2049 / 1 + 50 = 70.49 -> 70; 0.2051 -> 71 (70.51).
  CHECK(project_point(Vec3(0.2049, 0, 1), calib)->u == 70);
  CHECK(project_point(Vec3(0.2051, 0, 1), calib)->u == 71);
}

TEST_CASE("project_and_mask") {
  const auto calib = pinhole(100, 50, 50, 120, 120);
  PointCloud cloud;
  cloud.points = {{0, 0, 2}, {1, 0, 2}, {0, 0, -1}, {0.02, 0, 2}};
  Bitmask a(120, 120), b(120, 120);
  a.set(50, 50);
  a.set(51, 50);
  b.set(51, 50);
  b.set(100, 50);
  b.set(50, 50);
  const std::vector<Bitmask> masks{a, b};
  const auto idx = project_and_mask(cloud, calib, masks);
  REQUIRE(idx.size() == 2);
  // Point 3 projects to u = 51 and is listed under both masks.
  CHECK(idx[0] == std::vector<std::size_t>{0, 3});
  CHECK(idx[1] == std::vector<std::size_t>{0, 1, 3});
}

TEST_CASE("back-projection recovers assigned points") {
  const auto calib = vehicle_camera();
  const Eigen::Matrix3d k = calib.camera_projection.leftCols<3>();
  const Eigen::Isometry3d cam_from_lidar(calib.lidar_to_camera);
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> du(0, calib.image_width - 1), dv(0, calib.image_height - 1);
  std::uniform_real_distribution<double> dz(0.5, 40);
  for (int i = 0; i < 200; ++i) {
    const int u = du(rng), v = dv(rng);
    const double z = dz(rng);
    const Vec3 cam = z * (k.inverse() * Vec3(u, v, 1));
    const Vec3 lidar = cam_from_lidar.inverse() * cam;
    const auto px = project_point(lidar, calib);
    REQUIRE(px);
    CHECK(*px == Pixel{u, v});
    const Vec3 back = cam_from_lidar.inverse() * (z * (k.inverse() * Vec3(px->u, px->v, 1)));
    CHECK((back - lidar).norm() < 1e-6);
  }
}

TEST_CASE("filter_dynamic") {
  PointCloud c;
  for (int i = 0; i < 10; ++i) c.points.emplace_back(i, 0, 0);
  CHECK(filter_dynamic(c).points == c.points);
  c.dynamic.assign(10, 0);
  c.dynamic[1] = c.dynamic[4] = c.dynamic[9] = 1;
  const auto kept = filter_dynamic(c);
  REQUIRE(kept.points.size() == 7);
  CHECK(kept.points[0].x() == 0);
  CHECK(kept.points[1].x() == 2);
  CHECK(kept.points[6].x() == 8);
  c.dynamic.assign(10, 1);
  CHECK(filter_dynamic(c).points.empty());
}

TEST_CASE("denoise_object_points") {
  Points3 blob;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) blob.emplace_back(0.1 * i, 0.1 * j, 0);
  Points3 with_outlier = blob;
  with_outlier.emplace_back(10, 10, 10);
  CHECK(sorted(denoise_object_points(with_outlier, 0.5, 5)) == sorted(blob));

  const Points3 three{{0, 0, 0}, {0.1, 0, 0}, {0, 0.1, 0}};
  CHECK(denoise_object_points(three, 0.5, 5).empty());
  CHECK(sorted(denoise_object_points(blob, 0.5, 5)) == sorted(blob));

  SUBCASE("two equal clusters: the one nearest the overall centroid wins") {
    Points3 pts;
    for (int i = 0; i < 6; ++i) pts.emplace_back(0.1 * i, 0, 0);
    for (int i = 0; i < 6; ++i) pts.emplace_back(5 + 0.1 * i, 0, 0);
    pts.emplace_back(2.6, 0, 0);  // noise, pulls the centroid toward the first cluster
    pts.emplace_back(2.7, 0, 0);
    const auto out = denoise_object_points(pts, 0.15, 3);
    REQUIRE(out.size() == 6);
    for (const Vec3& p : out) CHECK(p.x() < 1);
  }

  SUBCASE("subset and idempotent") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0, 0.3);
    for (int trial = 0; trial < 20; ++trial) {
      Points3 pts;
      for (int i = 0; i < 60; ++i) pts.emplace_back(n(rng), n(rng), n(rng));
      for (int i = 0; i < 5; ++i) pts.emplace_back(5 + 3 * n(rng), 3 * n(rng), 0);
      const auto once = denoise_object_points(pts, 0.4, 4);
      const auto twice = denoise_object_points(once, 0.4, 4);
      CHECK(sorted(twice) == sorted(once));
      for (const Vec3& p : once) CHECK(std::find(pts.begin(), pts.end(), p) != pts.end());
    }
  }
}

TEST_CASE("to_map_frame") {
  const Points3 origin{{0, 0, 0}};
  CHECK(to_map_frame(origin, Pose{}) == origin);
  const Pose shift = Pose::from_rotation_translation(Eigen::Matrix3d::Identity(), Vec3(1, 2, 3));
  CHECK(to_map_frame(origin, shift)[0] == Vec3(1, 2, 3));
  const Pose yaw = Pose::from_rotation_translation(
      Eigen::AngleAxisd(M_PI / 2, Vec3::UnitZ()).toRotationMatrix(), Vec3::Zero());
  const Points3 x{{1, 0, 0}};
  CHECK((to_map_frame(x, yaw)[0] - Vec3(0, 1, 0)).norm() < 1e-9);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-20, 20);
  Points3 pts;
  for (int i = 0; i < 30; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
  const Pose any = Pose::from_rotation_translation(
      Eigen::AngleAxisd(1.1, Vec3(1, -2, 0.5).normalized()).toRotationMatrix(), Vec3(4, -7, 2));
  const auto moved = to_map_frame(pts, any);
  for (int i = 1; i < 30; ++i) {
    const double d0 = (pts[i] - pts[i - 1]).norm();
    CHECK(std::abs((moved[i] - moved[i - 1]).norm() - d0) <= 1e-9 * d0);
  }
}

TEST_CASE("extract_observations") {
  const auto calib = vehicle_camera();
  ingest::FrameRecord frame;
  frame.pose = Pose::from_rotation_translation(Eigen::Matrix3d::Identity(), Vec3(100, 0, 0));
  // A 4x4 patch of points 10 m ahead, plus a far point projecting into the same mask.
  Points3 patch;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) patch.emplace_back(10, -0.3 + 0.2 * i, 0.2 * j);
  frame.cloud.points = patch;
  frame.cloud.points.emplace_back(30, 0, 0.2);
  Bitmask mask(calib.image_width, calib.image_height);
  for (const Vec3& p : frame.cloud.points) {
    const auto px = project_point(p, calib);
    REQUIRE(px);
    mask.set(px->u, px->v);
  }
  Bitmask tiny(calib.image_width, calib.image_height);
  tiny.set(project_point(patch[0], calib)->u, project_point(patch[0], calib)->v);
  frame.detections.push_back({mask, "a red car", Embedding(Eigen::Vector2d(1, 0))});
  frame.detections.push_back({tiny, "a sign", Embedding(Eigen::Vector2d(0, 1))});

  ProjectionConfig cfg;
  const auto obs = extract_observations(frame, calib, cfg);
  REQUIRE(obs.size() == 1);  // the single-point detection falls below min_object_points
  CHECK(obs[0].caption == "a red car");
  Points3 expected;
  for (const Vec3& p : patch) expected.push_back(p + Vec3(100, 0, 0));
  CHECK(sorted(obs[0].points) == sorted(expected));

  cfg.min_object_points = 17;
  CHECK(extract_observations(frame, calib, cfg).empty());

  ProjectionConfig bad;
  bad.denoise_eps = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}
