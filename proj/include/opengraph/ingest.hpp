#pragma once

#include "opengraph/types.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace opengraph::ingest {

namespace fs = std::filesystem;

inline constexpr double kDefaultRotationTolerance = 1e-6;

/// Camera intrinsics (3x4, pixels) and the LiDAR-to-camera extrinsic.
struct SensorCalibration {
  Eigen::Matrix<double, 3, 4> camera_projection = Eigen::Matrix<double, 3, 4>::Zero();
  Eigen::Matrix4d lidar_to_camera = Eigen::Matrix4d::Identity();
  int image_width = 0;
  int image_height = 0;

  void validate(double rotation_tolerance = kDefaultRotationTolerance) const;
};

/// Rigid transform from the LiDAR frame into the map frame.
struct Pose {
  Eigen::Matrix4d transform = Eigen::Matrix4d::Identity();

  /// Builds a pose from 12 row-major values of the upper 3x4 block.
  static Pose from_row_major(std::span<const double, 12> values);
  static Pose from_rotation_translation(const Eigen::Matrix3d& r, const Vec3& t);

  Eigen::Matrix3d rotation() const { return transform.topLeftCorner<3, 3>(); }
  Vec3 translation() const { return transform.topRightCorner<3, 1>(); }
  Vec3 apply(const Vec3& p) const { return rotation() * p + translation(); }

  void validate(double rotation_tolerance = kDefaultRotationTolerance) const;
};

/// Throws DataError unless the 3x3 block is orthonormal with determinant +1.
void check_rotation(const Eigen::Matrix3d& r, double tolerance, std::string_view what);

struct PointCloud {
  Points3 points;
  /// Empty when the frame has no dynamic flags; otherwise one byte per point.
  std::vector<std::uint8_t> dynamic;
  /// Empty or one value per point.
  std::vector<float> intensity;

  void validate() const;
};

/// Dense row-major bitmask over the image.
struct Bitmask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  Bitmask() = default;
  Bitmask(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}

  bool test(int u, int v) const {
    return bits[static_cast<std::size_t>(v) * width + u] != 0;
  }
  void set(int u, int v) { bits[static_cast<std::size_t>(v) * width + u] = 1; }
  std::size_t count() const;

  bool operator==(const Bitmask&) const = default;
};

/// Run lengths over the row-major pixel order, alternating background and
/// foreground and starting with a (possibly empty) background run.
std::vector<std::uint32_t> rle_encode(const Bitmask& mask);
/// Throws DataError when the runs do not cover exactly width*height pixels.
Bitmask rle_decode(std::span<const std::uint32_t> counts, int width, int height);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

struct Detection {
  Bitmask mask;
  std::string caption;
  Embedding embedding;
};

struct FrameRecord {
  std::int64_t index = 0;
  PointCloud cloud;
  Pose pose;
  std::vector<Detection> detections;
};

struct ClassEntry {
  std::string name;
  std::optional<Embedding> embedding;
  std::optional<std::array<std::uint8_t, 3>> color;
};

/// Contents of manifest.json.
struct Manifest {
  int embedding_dim = 0;
  int image_width = 0;
  int image_height = 0;
  /// Name of the embedder that produced detection embeddings ("hash" for the
  /// built-in signed-hash embedder). Empty when unknown.
  std::string embedder;
  std::vector<ClassEntry> class_list;
};

struct IngestConfig {
  double rotation_tolerance = kDefaultRotationTolerance;
  /// When set, poses.txt holds camera-frame poses and is converted to the
  /// LiDAR frame as pose * lidar_to_camera.
  bool poses_in_camera_frame = false;
};

/// Raised when a whole frame has to be dropped (e.g. inconsistent RLE).
class FrameRejected : public DataError {
 public:
  using DataError::DataError;
};

struct DetectionFile {
  std::vector<Detection> detections;
  std::vector<std::string> warnings;
};

/// Parses one detections/<frame>.jsonl file. Embeddings are L2-normalised;
/// degenerate detections are dropped with a warning. Throws FrameRejected for
/// mask geometry problems and DataError for an embedding-dimension mismatch.
DetectionFile load_frame_detections(const fs::path& path, const Manifest& manifest);

Manifest load_manifest(const fs::path& path);
SensorCalibration load_calibration(const fs::path& path, const Manifest& manifest);
std::vector<Pose> load_poses(const fs::path& path);
/// Flat float32 (x, y, z, intensity) records, or ASCII "x y z [intensity]" lines
/// for .txt/.xyz files.
PointCloud load_cloud(const fs::path& path);
std::vector<std::uint8_t> load_dynamic_flags(const fs::path& path);

void write_manifest(const fs::path& path, const Manifest& manifest);
void write_calibration(const fs::path& path, const SensorCalibration& calib);
void write_poses(const fs::path& path, std::span<const Pose> poses);
void write_cloud(const fs::path& path, const PointCloud& cloud);
void write_dynamic_flags(const fs::path& path, std::span<const std::uint8_t> flags);
void write_frame_detections(const fs::path& path, std::span<const Detection> detections);

/// Canonical file stem for a frame index ("000042").
std::string frame_stem(std::int64_t index);

struct FrameFiles {
  std::int64_t index = 0;
  fs::path cloud;
  fs::path detections;
  std::optional<fs::path> dynamic;
};

/// Frames of a sequence directory in index order, loaded on demand.
class FrameStream {
 public:
  FrameStream(fs::path root, Manifest manifest, SensorCalibration calibration,
              std::vector<Pose> trajectory, std::vector<FrameFiles> frames,
              std::vector<std::string> warnings, std::size_t skipped_frames,
              IngestConfig config);

  const Manifest& manifest() const { return manifest_; }
  const SensorCalibration& calibration() const { return calibration_; }
  /// Every pose in poses.txt, including those without a frame.
  const std::vector<Pose>& trajectory() const { return trajectory_; }
  const std::vector<FrameFiles>& frame_files() const { return frames_; }

  /// Next complete frame, or nullopt at the end. Rejected frames are skipped
  /// and recorded in warnings().
  std::optional<FrameRecord> next();

  const std::vector<std::string>& warnings() const { return warnings_; }
  std::size_t skipped_frames() const { return skipped_frames_; }

 private:
  FrameRecord load(const FrameFiles& files);

  fs::path root_;
  Manifest manifest_;
  SensorCalibration calibration_;
  std::vector<Pose> trajectory_;
  std::vector<FrameFiles> frames_;
  std::vector<std::string> warnings_;
  IngestConfig config_;
  std::size_t cursor_ = 0;
  std::size_t skipped_frames_ = 0;
};

/// Opens a sequence directory (manifest.json, calib.txt, poses.txt,
/// velodyne/, detections/, optional dynamic/). Throws DataError("no frames
/// found") when no frame files exist.
FrameStream load_sequence(const fs::path& data_dir, const IngestConfig& config = {});

}  // namespace opengraph::ingest
