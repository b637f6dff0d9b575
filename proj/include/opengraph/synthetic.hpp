#pragma once

#include "opengraph/ingest.hpp"
#include "opengraph/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace opengraph::synthetic {

/// 64-bit FNV-1a over the bytes of `text`.
std::uint64_t fnv1a64(std::string_view text);

/// Signed-hash bag-of-tokens embedding. Tokens come from text::tokenize; each
/// token t adds sign(t) to component fnv1a64(t) % dim, where the sign is −1
/// when the top bit of the hash is set. The sum is normalised.
/// Throws InvalidArgument for dim < 8 or text without tokens.
Embedding hash_embedding(std::string_view text, int dim);

enum class EmbeddingMode { hash, class_basis, instance_basis };
enum class TrajectoryShape { straight, l_shape, t_shape, cross };

std::string_view to_string(TrajectoryShape shape);
TrajectoryShape trajectory_shape_from_string(std::string_view name);

struct ObjectSpec {
  std::string class_name;
  std::string caption;
  Vec3 center = Vec3::Zero();
  Vec3 extent = Vec3::Ones();
  /// Surface sample spacing in metres.
  double spacing = 0.2;
};

struct TrajectorySpec {
  TrajectoryShape shape = TrajectoryShape::straight;
  double arm_length = 50.0;
  double spacing = 1.0;
  /// Gaussian σ added to the recorded x/y positions.
  double noise = 0.0;
};

struct SceneSpec {
  std::uint64_t seed = 0;
  std::size_t frames = 5;
  /// Trajectory sample indices used as frames; evenly spaced when empty.
  std::vector<std::size_t> frame_indices;
  /// Gaussian σ added to LiDAR points.
  double point_noise = 0.0;
  int embedding_dim = 64;
  EmbeddingMode embedding_mode = EmbeddingMode::hash;
  int image_width = 1200;
  int image_height = 400;
  double focal = 300.0;
  double sensor_height = 1.7;
  double lidar_range = 30.0;
  TrajectorySpec trajectory;
  /// Explicit objects; when empty `auto_objects` are laid out ahead of frames.
  std::vector<ObjectSpec> objects;
  std::size_t auto_objects = 0;
  /// Ground-plane sample spacing; 0 disables the ground.
  double ground_spacing = 1.0;

  void validate() const;
};

SceneSpec parse_scene_spec(std::string_view json_text);
SceneSpec load_scene_spec(const std::filesystem::path& path);

/// Noise-free trajectory samples. Cross and T shapes are driven as separate
/// passes, so consecutive samples jump where one pass ends.
Points2 trajectory_points(const TrajectorySpec& spec);

/// Interior lane nodes and trajectory endpoints of a shape.
struct LaneTruth {
  std::vector<Vec2> interior;
  std::string interior_kind;
  std::vector<Vec2> endpoints;
};
LaneTruth lane_truth(const TrajectorySpec& spec);

/// Default box size for the built-in class names.
Vec3 default_extent(std::string_view class_name);

/// Objects placed at fixed bearings 15 m ahead of frame poses, cycling frames
/// first, each with a distinct caption.
std::vector<ObjectSpec> layout_objects(const SceneSpec& spec, std::span<const ingest::Pose> frame_poses);

/// Points on the surface of an object box (a boundary lattice, no duplicates).
Points3 sample_box_surface(const ObjectSpec& object);

struct GroundTruthObject {
  std::int64_t id = 0;
  std::string class_name;
  std::int32_t class_id = 0;
  std::string caption;
  Vec3 center = Vec3::Zero();
  Vec3 extent = Vec3::Zero();
  Embedding embedding;
  std::size_t point_count = 0;
  std::vector<std::size_t> observed_frames;
};

struct GroundTruth {
  std::vector<std::string> classes;
  std::vector<GroundTruthObject> objects;
  /// Object points in the world frame, grouped by object.
  Points3 object_points;
  std::vector<std::int32_t> point_labels;
  std::vector<std::int64_t> point_objects;
  LaneTruth lanes;
  std::vector<std::size_t> frame_indices;
};

/// Writes manifest.json, calib.txt, poses.txt, velodyne/, detections/,
/// ground_truth.json and ground_truth_labels.bin into `out_dir`.
GroundTruth generate_scene(const SceneSpec& spec, const std::filesystem::path& out_dir);

GroundTruth load_ground_truth(const std::filesystem::path& path);

}  // namespace opengraph::synthetic
