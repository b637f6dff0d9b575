#include "opengraph/synthetic.hpp"

#include "opengraph/projection.hpp"
#include "opengraph/query.hpp"
#include "opengraph/text.hpp"

#include <json.hpp>

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

namespace opengraph::synthetic {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : text) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

Embedding hash_embedding(std::string_view text, int dim) {
  if (dim < 8) throw InvalidArgument("hash_embedding: dim must be >= 8");
  const auto tokens = text::tokenize(text);
  if (tokens.empty()) throw InvalidArgument("hash_embedding: text has no tokens");
  Embedding v = Embedding::Zero(dim);
  for (const std::string& t : tokens) {
    const std::uint64_t h = fnv1a64(t);
    v[static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dim))] += (h >> 63) ? -1.0 : 1.0;
  }
  const double n = v.norm();
  // Tokens cancelling exactly (same slot, opposite signs) leave nothing.
  if (n == 0.0) throw InvalidArgument("hash_embedding: tokens cancel to a zero vector");
  return v / n;
}

namespace {

/// mt19937_64 output mapped by hand so results do not depend on the
/// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (spare_) {
      const double s = *spare_;
      spare_.reset();
      return s;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

constexpr const char* kAutoClasses[] = {"car", "tree", "pole", "sign", "person", "bicycle", "fence", "bin"};

constexpr const char* kAdjectives[] = {
    "red",    "blue",   "green",  "white",  "black",  "yellow", "orange", "purple",
    "silver", "brown",  "grey",   "pink",   "golden", "rusty",  "shiny",  "dusty",
    "wooden", "metal",  "plastic", "striped", "spotted", "broken", "muddy", "clean",
    "tiny",   "huge",   "narrow", "wide",   "bright", "faded",  "crooked", "painted"};

constexpr double kBearingsDeg[] = {12.0, -12.0, 32.0, -32.0, 50.0, -50.0};

std::vector<std::pair<std::size_t, std::size_t>> passes(const TrajectorySpec& spec) {
  const double L = spec.arm_length;
  const auto n_arm = static_cast<std::size_t>(std::llround(L / spec.spacing));
  switch (spec.shape) {
    case TrajectoryShape::straight:
    case TrajectoryShape::l_shape: return {{0, 2 * n_arm + 1}};
    case TrajectoryShape::t_shape: return {{0, 2 * n_arm + 1}, {2 * n_arm + 1, 3 * n_arm + 2}};
    case TrajectoryShape::cross: return {{0, 2 * n_arm + 1}, {2 * n_arm + 1, 4 * n_arm + 2}};
  }
  return {};
}

Eigen::Matrix3d yaw_rotation(double yaw) {
  return Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
}

ingest::SensorCalibration make_calibration(const SceneSpec& spec) {
  ingest::SensorCalibration c;
  c.image_width = spec.image_width;
  c.image_height = spec.image_height;
  c.camera_projection << spec.focal, 0, spec.image_width / 2.0, 0,  //
      0, spec.focal, spec.image_height / 2.0, 0,                    //
      0, 0, 1, 0;
  c.lidar_to_camera << 0, -1, 0, 0,  //
      0, 0, -1, 0,                   //
      1, 0, 0, 0,                    //
      0, 0, 0, 1;
  return c;
}

std::vector<ingest::Pose> make_trajectory(const SceneSpec& spec, Rng& rng) {
  const Points2 pts = trajectory_points(spec.trajectory);
  std::vector<ingest::Pose> poses;
  for (const auto& [begin, end] : passes(spec.trajectory)) {
    for (std::size_t i = begin; i < end; ++i) {
      const Vec2 dir = i + 1 < end ? Vec2(pts[i + 1] - pts[i]) : Vec2(pts[i] - pts[i - 1]);
      const double yaw = std::atan2(dir.y(), dir.x());
      Vec3 t(pts[i].x(), pts[i].y(), spec.sensor_height);
      if (spec.trajectory.noise > 0.0) {
        t.x() += spec.trajectory.noise * rng.normal();
        t.y() += spec.trajectory.noise * rng.normal();
      }
      poses.push_back(ingest::Pose::from_rotation_translation(yaw_rotation(yaw), t));
    }
  }
  return poses;
}

std::vector<std::size_t> choose_frames(const SceneSpec& spec, std::size_t n_poses) {
  if (!spec.frame_indices.empty()) return spec.frame_indices;
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < spec.frames; ++k) {
    out.push_back(spec.frames == 1 ? 0
                                   : static_cast<std::size_t>(std::llround(
                                         static_cast<double>(k) * static_cast<double>(n_poses - 1) /
                                         static_cast<double>(spec.frames - 1))));
  }
  return out;
}

double footprint_distance(const Vec2& p, const ObjectSpec& o) {
  const double dx = std::max(0.0, std::abs(p.x() - o.center.x()) - o.extent.x() / 2.0);
  const double dy = std::max(0.0, std::abs(p.y() - o.center.y()) - o.extent.y() / 2.0);
  return std::hypot(dx, dy);
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
json vec_json(const Vec2& v) { return json::array({v.x(), v.y()}); }
Vec3 vec3_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw DataError("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}
Vec2 vec2_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw DataError("expected a 2-vector");
  return {j[0].get<double>(), j[1].get<double>()};
}

EmbeddingMode embedding_mode_from_string(const std::string& s) {
  if (s == "hash") return EmbeddingMode::hash;
  if (s == "class_basis") return EmbeddingMode::class_basis;
  if (s == "instance_basis") return EmbeddingMode::instance_basis;
  throw DataError("scene spec: unknown embedding_mode '" + s + "'");
}

}  // namespace

std::string_view to_string(TrajectoryShape shape) {
  switch (shape) {
    case TrajectoryShape::straight: return "straight";
    case TrajectoryShape::l_shape: return "L";
    case TrajectoryShape::t_shape: return "T";
    case TrajectoryShape::cross: return "cross";
  }
  return "straight";
}

TrajectoryShape trajectory_shape_from_string(std::string_view name) {
  if (name == "straight") return TrajectoryShape::straight;
  if (name == "L" || name == "l") return TrajectoryShape::l_shape;
  if (name == "T" || name == "t") return TrajectoryShape::t_shape;
  if (name == "cross") return TrajectoryShape::cross;
  throw DataError("unknown trajectory shape '" + std::string(name) + "'");
}

void SceneSpec::validate() const {
  if (!(trajectory.arm_length > 0.0) || !(trajectory.spacing > 0.0) ||
      trajectory.spacing > trajectory.arm_length) {
    throw InvalidArgument("scene spec: trajectory arm_length and spacing must be positive");
  }
  if (trajectory.noise < 0.0 || point_noise < 0.0) throw InvalidArgument("scene spec: negative noise");
  if (frames == 0 && frame_indices.empty()) throw InvalidArgument("scene spec: no frames");
  const std::size_t n = trajectory_points(trajectory).size();
  if (frame_indices.empty() && frames > n) throw InvalidArgument("scene spec: more frames than poses");
  for (std::size_t k = 0; k < frame_indices.size(); ++k) {
    if (frame_indices[k] >= n || (k > 0 && frame_indices[k] <= frame_indices[k - 1])) {
      throw InvalidArgument("scene spec: frame_indices must increase and stay below " + std::to_string(n));
    }
  }
  if (embedding_dim < 8) throw InvalidArgument("scene spec: embedding_dim must be >= 8");
  if (image_width <= 0 || image_height <= 0 || !(focal > 0.0)) {
    throw InvalidArgument("scene spec: camera must have positive size and focal length");
  }
  if (!(lidar_range > 0.0) || ground_spacing < 0.0) throw InvalidArgument("scene spec: bad ranges");
  for (const ObjectSpec& o : objects) {
    if (!(o.extent.minCoeff() > 0.0) || !(o.spacing > 0.0)) {
      throw InvalidArgument("scene spec: object extents and spacing must be positive");
    }
    if (o.class_name.empty() || text::tokenize(o.caption).empty()) {
      throw InvalidArgument("scene spec: objects need a class and a caption");
    }
  }
  if (!objects.empty() && auto_objects > 0) {
    throw InvalidArgument("scene spec: give either objects or auto_objects");
  }
  if (auto_objects > std::size(kAdjectives) * std::size(kAdjectives)) {
    throw InvalidArgument("scene spec: too many auto objects");
  }
}

SceneSpec parse_scene_spec(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw DataError("scene spec: " + std::string(e.what()));
  }
  try {
    SceneSpec s;
    s.seed = j.value("seed", std::uint64_t{0});
    s.frames = j.value("frames", std::size_t{5});
    s.frame_indices = j.value("frame_indices", std::vector<std::size_t>{});
    s.point_noise = j.value("point_noise", 0.0);
    s.embedding_dim = j.value("embedding_dim", 64);
    s.embedding_mode = embedding_mode_from_string(j.value("embedding_mode", std::string("hash")));
    if (j.contains("image")) {
      const json& im = j.at("image");
      s.image_width = im.value("width", s.image_width);
      s.image_height = im.value("height", s.image_height);
      s.focal = im.value("focal", s.focal);
    }
    s.sensor_height = j.value("sensor_height", s.sensor_height);
    s.lidar_range = j.value("lidar_range", s.lidar_range);
    s.ground_spacing = j.value("ground_spacing", s.ground_spacing);
    if (j.contains("trajectory")) {
      const json& t = j.at("trajectory");
      s.trajectory.shape = trajectory_shape_from_string(t.value("shape", std::string("straight")));
      s.trajectory.arm_length = t.value("arm_length", s.trajectory.arm_length);
      s.trajectory.spacing = t.value("spacing", s.trajectory.spacing);
      s.trajectory.noise = t.value("noise", 0.0);
    }
    if (j.contains("objects")) {
      for (const json& o : j.at("objects")) {
        ObjectSpec spec;
        spec.class_name = o.at("class").get<std::string>();
        spec.caption = o.value("caption", spec.class_name);
        spec.extent = o.contains("extent") ? vec3_from(o.at("extent")) : default_extent(spec.class_name);
        spec.center = vec3_from(o.at("center"));
        spec.spacing = o.value("spacing", spec.spacing);
        s.objects.push_back(std::move(spec));
      }
    }
    s.auto_objects = j.value("auto_objects", std::size_t{0});
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw DataError("scene spec: " + std::string(e.what()));
  }
}

SceneSpec load_scene_spec(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open scene spec " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scene_spec(ss.str());
}

Points2 trajectory_points(const TrajectorySpec& spec) {
  const double L = spec.arm_length;
  const auto n_arm = static_cast<std::size_t>(std::llround(L / spec.spacing));
  const double step = L / static_cast<double>(n_arm);
  Points2 out;
  auto line = [&](const Vec2& from, const Vec2& dir, std::size_t count, std::size_t first) {
    for (std::size_t i = first; i < count; ++i) out.push_back(from + dir * (step * static_cast<double>(i)));
  };
  switch (spec.shape) {
    case TrajectoryShape::straight:
      line({-L, 0.0}, Vec2::UnitX(), 2 * n_arm + 1, 0);
      break;
    case TrajectoryShape::l_shape:
      line({-L, 0.0}, Vec2::UnitX(), n_arm + 1, 0);
      line({0.0, 0.0}, Vec2::UnitY(), n_arm + 1, 1);
      break;
    case TrajectoryShape::t_shape:
      line({-L, 0.0}, Vec2::UnitX(), 2 * n_arm + 1, 0);
      line({0.0, 0.0}, Vec2::UnitY(), n_arm + 1, 0);
      break;
    case TrajectoryShape::cross:
      line({-L, 0.0}, Vec2::UnitX(), 2 * n_arm + 1, 0);
      line({0.0, -L}, Vec2::UnitY(), 2 * n_arm + 1, 0);
      break;
  }
  return out;
}

LaneTruth lane_truth(const TrajectorySpec& spec) {
  const double L = spec.arm_length;
  LaneTruth t;
  switch (spec.shape) {
    case TrajectoryShape::straight:
      t.endpoints = {{-L, 0.0}, {L, 0.0}};
      break;
    case TrajectoryShape::l_shape:
      t.interior = {{0.0, 0.0}};
      t.interior_kind = "l_intersection";
      t.endpoints = {{-L, 0.0}, {0.0, L}};
      break;
    case TrajectoryShape::t_shape:
      t.interior = {{0.0, 0.0}};
      t.interior_kind = "t_intersection";
      t.endpoints = {{-L, 0.0}, {L, 0.0}, {0.0, L}};
      break;
    case TrajectoryShape::cross:
      t.interior = {{0.0, 0.0}};
      t.interior_kind = "intersection";
      t.endpoints = {{-L, 0.0}, {L, 0.0}, {0.0, -L}, {0.0, L}};
      break;
  }
  return t;
}

Vec3 default_extent(std::string_view c) {
  if (c == "car") return {3.6, 1.6, 1.4};
  if (c == "tree") return {1.0, 1.0, 3.0};
  if (c == "pole") return {0.3, 0.3, 3.0};
  if (c == "sign") return {0.8, 0.2, 2.2};
  if (c == "person") return {0.6, 0.6, 1.7};
  if (c == "bicycle") return {1.6, 0.5, 1.0};
  if (c == "fence") return {2.0, 0.3, 1.2};
  if (c == "bin") return {0.7, 0.7, 1.0};
  return {1.0, 1.0, 1.0};
}

std::vector<ObjectSpec> layout_objects(const SceneSpec& spec, std::span<const ingest::Pose> frame_poses) {
  if (frame_poses.empty()) throw InvalidArgument("layout_objects: no frames");
  std::vector<ObjectSpec> out;
  const std::size_t F = frame_poses.size();
  const std::size_t A = std::size(kAdjectives);
  const std::size_t B = std::size(kBearingsDeg);
  for (std::size_t j = 0; j < spec.auto_objects; ++j) {
    const ingest::Pose& pose = frame_poses[j % F];
    const std::size_t slot = j / F;
    const double bearing = kBearingsDeg[slot % B] * std::numbers::pi / 180.0;
    const double distance = 15.0 + 6.0 * static_cast<double>(slot / B);
    const Vec3 local(distance * std::cos(bearing), distance * std::sin(bearing), 0.0);
    Vec3 world = pose.rotation() * local + pose.translation();

    ObjectSpec o;
    o.class_name = kAutoClasses[j % std::size(kAutoClasses)];
    o.caption = std::string(kAdjectives[j % A]) + " " + o.class_name;
    if (j >= A) o.caption = std::string(kAdjectives[(j / A) % A]) + " " + o.caption;
    o.extent = default_extent(o.class_name);
    world.z() = o.extent.z() / 2.0;
    o.center = world;
    o.spacing = 0.2;
    out.push_back(std::move(o));
  }
  return out;
}

Points3 sample_box_surface(const ObjectSpec& o) {
  std::array<std::size_t, 3> n{};
  for (int a = 0; a < 3; ++a) {
    n[a] = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(o.extent[a] / o.spacing)) + 1);
  }
  const Vec3 lo = o.center - o.extent / 2.0;
  Points3 out;
  for (std::size_t i = 0; i < n[0]; ++i) {
    for (std::size_t j = 0; j < n[1]; ++j) {
      for (std::size_t k = 0; k < n[2]; ++k) {
        const bool boundary = i == 0 || j == 0 || k == 0 || i + 1 == n[0] || j + 1 == n[1] || k + 1 == n[2];
        if (!boundary) continue;
        out.emplace_back(lo.x() + o.extent.x() * static_cast<double>(i) / static_cast<double>(n[0] - 1),
                         lo.y() + o.extent.y() * static_cast<double>(j) / static_cast<double>(n[1] - 1),
                         lo.z() + o.extent.z() * static_cast<double>(k) / static_cast<double>(n[2] - 1));
      }
    }
  }
  return out;
}

GroundTruth generate_scene(const SceneSpec& spec, const fs::path& out_dir) {
  spec.validate();
  Rng rng(spec.seed);
  const std::vector<ingest::Pose> poses = make_trajectory(spec, rng);
  const std::vector<std::size_t> frames = choose_frames(spec, poses.size());
  for (std::size_t f : frames) {
    if (f >= poses.size()) throw InvalidArgument("scene spec: frame index out of range");
  }
  std::vector<ingest::Pose> frame_poses;
  for (std::size_t f : frames) frame_poses.push_back(poses[f]);
  const std::vector<ObjectSpec> objects =
      spec.objects.empty() ? layout_objects(spec, frame_poses) : spec.objects;

  GroundTruth gt;
  gt.frame_indices = frames;
  gt.lanes = lane_truth(spec.trajectory);
  std::map<std::string, std::int32_t> class_index;
  for (const ObjectSpec& o : objects) {
    if (class_index.emplace(o.class_name, static_cast<std::int32_t>(gt.classes.size())).second) {
      gt.classes.push_back(o.class_name);
    }
  }
  const auto C = static_cast<int>(gt.classes.size());
  const auto N = static_cast<int>(objects.size());
  if (spec.embedding_mode == EmbeddingMode::class_basis && spec.embedding_dim < C) {
    throw InvalidArgument("scene spec: class_basis needs embedding_dim >= class count");
  }
  if (spec.embedding_mode == EmbeddingMode::instance_basis && spec.embedding_dim < C + N) {
    throw InvalidArgument("scene spec: instance_basis needs embedding_dim >= classes + objects");
  }
  auto basis = [&](int k) { return Embedding(Embedding::Unit(spec.embedding_dim, k)); };

  ingest::Manifest manifest;
  manifest.embedding_dim = spec.embedding_dim;
  manifest.image_width = spec.image_width;
  manifest.image_height = spec.image_height;
  manifest.embedder = spec.embedding_mode == EmbeddingMode::hash ? "hash" : "synthetic-basis";
  for (int c = 0; c < C; ++c) {
    ingest::ClassEntry e;
    e.name = gt.classes[static_cast<std::size_t>(c)];
    e.embedding = spec.embedding_mode == EmbeddingMode::hash ? hash_embedding(e.name, spec.embedding_dim)
                                                             : basis(c);
    manifest.class_list.push_back(std::move(e));
  }

  std::vector<Points3> object_points;
  for (int j = 0; j < N; ++j) {
    const ObjectSpec& o = objects[static_cast<std::size_t>(j)];
    GroundTruthObject g;
    g.id = j;
    g.class_name = o.class_name;
    g.class_id = class_index.at(o.class_name);
    g.caption = o.caption;
    g.center = o.center;
    g.extent = o.extent;
    switch (spec.embedding_mode) {
      case EmbeddingMode::hash: g.embedding = hash_embedding(o.caption, spec.embedding_dim); break;
      case EmbeddingMode::class_basis: g.embedding = basis(g.class_id); break;
      case EmbeddingMode::instance_basis:
        g.embedding = (basis(g.class_id) + basis(C + j)).normalized();
        break;
    }
    object_points.push_back(sample_box_surface(o));
    g.point_count = object_points.back().size();
    for (const Vec3& p : object_points.back()) {
      gt.object_points.push_back(p);
      gt.point_labels.push_back(g.class_id);
      gt.point_objects.push_back(j);
    }
    gt.objects.push_back(std::move(g));
  }

  Points3 ground;
  if (spec.ground_spacing > 0.0) {
    Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity());
    Vec2 hi = -lo;
    for (const ingest::Pose& p : poses) {
      lo = lo.cwiseMin(p.translation().head<2>());
      hi = hi.cwiseMax(p.translation().head<2>());
    }
    const double r = spec.lidar_range;
    const double g = spec.ground_spacing;
    const double x0 = std::floor((lo.x() - r) / g) * g;
    const double y0 = std::floor((lo.y() - r) / g) * g;
    const auto nx = static_cast<std::size_t>(std::ceil((hi.x() + r - x0) / g)) + 1;
    const auto ny = static_cast<std::size_t>(std::ceil((hi.y() + r - y0) / g)) + 1;
    for (std::size_t i = 0; i < nx; ++i) {
      for (std::size_t k = 0; k < ny; ++k) {
        const Vec2 p(x0 + g * static_cast<double>(i), y0 + g * static_cast<double>(k));
        bool clear = true;
        for (const ObjectSpec& o : objects) {
          if (footprint_distance(p, o) < 1.0) {
            clear = false;
            break;
          }
        }
        if (clear) ground.emplace_back(p.x(), p.y(), 0.0);
      }
    }
  }

  fs::create_directories(out_dir);
  const ingest::SensorCalibration calib = make_calibration(spec);
  ingest::write_manifest(out_dir / "manifest.json", manifest);
  ingest::write_calibration(out_dir / "calib.txt", calib);
  ingest::write_poses(out_dir / "poses.txt", poses);

  for (std::size_t fi = 0; fi < frames.size(); ++fi) {
    const ingest::Pose& pose = poses[frames[fi]];
    const Eigen::Matrix3d rt = pose.rotation().transpose();
    const Vec3 origin = pose.translation();
    // World -> LiDAR, rounded to float32 as stored on disk.
    auto to_lidar = [&](const Vec3& w) {
      Vec3 p = rt * (w - origin);
      if (spec.point_noise > 0.0) {
        p += spec.point_noise * Vec3(rng.normal(), rng.normal(), rng.normal());
      }
      // Round through float32 exactly as the cloud is stored; volatile keeps
      // the optimizer from folding the narrowing cast away.
      volatile float f[3] = {static_cast<float>(p.x()), static_cast<float>(p.y()),
                             static_cast<float>(p.z())};
      return Vec3(f[0], f[1], f[2]);
    };

    ingest::PointCloud cloud;
    for (const Vec3& w : ground) {
      if ((w - origin).norm() <= spec.lidar_range) cloud.points.push_back(to_lidar(w));
    }
    std::vector<std::set<std::pair<int, int>>> pixels(objects.size());
    std::vector<bool> complete(objects.size(), true);
    std::vector<bool> touches(objects.size(), false);
    for (std::size_t j = 0; j < objects.size(); ++j) {
      for (const Vec3& w : object_points[j]) {
        if ((w - origin).norm() > spec.lidar_range) {
          complete[j] = false;
          continue;
        }
        const Vec3 p = to_lidar(w);
        cloud.points.push_back(p);
        const auto px = projection::project_point(p, calib);
        if (px) {
          pixels[j].emplace(px->u, px->v);
          touches[j] = true;
        } else {
          complete[j] = false;
        }
      }
    }

    std::vector<ingest::Detection> detections;
    for (std::size_t j = 0; j < objects.size(); ++j) {
      if (!complete[j] || pixels[j].empty()) continue;
      bool disjoint = true;
      for (std::size_t k = 0; k < objects.size() && disjoint; ++k) {
        if (k == j || !touches[k]) continue;
        for (const auto& px : pixels[j]) {
          if (pixels[k].count(px)) {
            disjoint = false;
            break;
          }
        }
      }
      if (!disjoint) continue;
      ingest::Detection d;
      d.mask = ingest::Bitmask(spec.image_width, spec.image_height);
      for (const auto& [u, v] : pixels[j]) d.mask.set(u, v);
      d.caption = objects[j].caption;
      d.embedding = gt.objects[j].embedding;
      detections.push_back(std::move(d));
      gt.objects[j].observed_frames.push_back(frames[fi]);
    }

    const std::string stem = ingest::frame_stem(static_cast<std::int64_t>(frames[fi]));
    ingest::write_cloud(out_dir / "velodyne" / (stem + ".bin"), cloud);
    ingest::write_frame_detections(out_dir / "detections" / (stem + ".jsonl"), detections);
  }

  json objects_json = json::array();
  std::vector<std::size_t> offsets{0};
  for (const GroundTruthObject& g : gt.objects) {
    objects_json.push_back({{"id", g.id},
                            {"class", g.class_name},
                            {"class_id", g.class_id},
                            {"caption", g.caption},
                            {"center", vec_json(g.center)},
                            {"extent", vec_json(g.extent)},
                            {"embedding", std::vector<double>(g.embedding.begin(), g.embedding.end())},
                            {"point_count", g.point_count},
                            {"observed_frames", g.observed_frames}});
    offsets.push_back(offsets.back() + g.point_count);
  }
  json lanes = json::object();
  lanes["interior"] = json::array();
  for (const Vec2& p : gt.lanes.interior) lanes["interior"].push_back(vec_json(p));
  lanes["interior_kind"] = gt.lanes.interior_kind;
  lanes["endpoints"] = json::array();
  for (const Vec2& p : gt.lanes.endpoints) lanes["endpoints"].push_back(vec_json(p));
  const json doc = {{"classes", gt.classes},
                    {"objects", objects_json},
                    {"point_offsets", offsets},
                    {"lanes", lanes},
                    {"frame_indices", frames},
                    {"labels_file", "ground_truth_labels.bin"}};
  std::ofstream(out_dir / "ground_truth.json") << doc.dump(2) << '\n';

  query::LabeledCloud labels;
  labels.class_names = gt.classes;
  for (std::size_t c = 0; c < gt.classes.size(); ++c) labels.colors.push_back(hierarchy::default_color(c));
  for (std::size_t i = 0; i < gt.object_points.size(); ++i) {
    labels.points.push_back(gt.object_points[i].cast<float>());
    labels.labels.push_back(static_cast<std::uint16_t>(gt.point_labels[i]));
  }
  query::write_labeled_cloud(labels, out_dir / "ground_truth_labels.bin");
  return gt;
}

GroundTruth load_ground_truth(const fs::path& dir) {
  std::ifstream in(dir / "ground_truth.json");
  if (!in) throw DataError("cannot open " + (dir / "ground_truth.json").string());
  try {
    const json doc = json::parse(in);
    GroundTruth gt;
    gt.classes = doc.at("classes").get<std::vector<std::string>>();
    gt.frame_indices = doc.at("frame_indices").get<std::vector<std::size_t>>();
    for (const json& o : doc.at("objects")) {
      GroundTruthObject g;
      g.id = o.at("id").get<std::int64_t>();
      g.class_name = o.at("class").get<std::string>();
      g.class_id = o.at("class_id").get<std::int32_t>();
      g.caption = o.at("caption").get<std::string>();
      g.center = vec3_from(o.at("center"));
      g.extent = vec3_from(o.at("extent"));
      const auto e = o.at("embedding").get<std::vector<double>>();
      g.embedding = Eigen::Map<const Embedding>(e.data(), static_cast<Eigen::Index>(e.size()));
      g.point_count = o.at("point_count").get<std::size_t>();
      g.observed_frames = o.at("observed_frames").get<std::vector<std::size_t>>();
      gt.objects.push_back(std::move(g));
    }
    const json& lanes = doc.at("lanes");
    for (const json& p : lanes.at("interior")) gt.lanes.interior.push_back(vec2_from(p));
    gt.lanes.interior_kind = lanes.at("interior_kind").get<std::string>();
    for (const json& p : lanes.at("endpoints")) gt.lanes.endpoints.push_back(vec2_from(p));

    const query::LabeledCloud labels =
        query::read_labeled_cloud(dir / doc.at("labels_file").get<std::string>());
    const auto offsets = doc.at("point_offsets").get<std::vector<std::size_t>>();
    if (offsets.size() != gt.objects.size() + 1 || offsets.back() != labels.points.size()) {
      throw DataError("ground truth: point offsets do not match the labels file");
    }
    for (std::size_t j = 0; j < gt.objects.size(); ++j) {
      for (std::size_t i = offsets[j]; i < offsets[j + 1]; ++i) {
        gt.object_points.push_back(labels.points[i].cast<double>());
        gt.point_labels.push_back(labels.labels[i]);
        gt.point_objects.push_back(gt.objects[j].id);
      }
    }
    return gt;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("ground truth: " + std::string(e.what()));
  }
}

}  // namespace opengraph::synthetic
