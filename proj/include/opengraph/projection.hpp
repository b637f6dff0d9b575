#pragma once

#include "opengraph/ingest.hpp"
#include "opengraph/types.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace opengraph::projection {

/// One denoised object seen in one frame, in map coordinates.
struct ObjectObservation {
  Points3 points;
  std::string caption;
  Embedding embedding;
};

struct ProjectionConfig {
  double denoise_eps = 0.5;
  std::size_t denoise_min_pts = 5;
  /// Observations with fewer points after denoising are dropped.
  std::size_t min_object_points = 10;

  void validate() const;
};

struct Pixel {
  int u = 0;
  int v = 0;
  bool operator==(const Pixel&) const = default;
};

/// Pixel of a LiDAR point: nearest-integer rounding after the perspective
/// divide. nullopt when the point is behind the camera or off-image.
std::optional<Pixel> project_point(const Vec3& lidar_point, const ingest::SensorCalibration& calib);

/// Drops points whose dynamic flag is set; unflagged clouds pass unchanged.
ingest::PointCloud filter_dynamic(const ingest::PointCloud& cloud);

/// For every mask, indices of the cloud points that project inside it. A
/// point inside several masks is listed under each of them.
std::vector<std::vector<std::size_t>> project_and_mask(const ingest::PointCloud& cloud,
                                                       const ingest::SensorCalibration& calib,
                                                       std::span<const ingest::Bitmask> masks);

/// Keeps the largest DBSCAN cluster. Ties go to the cluster holding the point
/// nearest to the centroid of all clustered points. All-noise input yields {}.
Points3 denoise_object_points(std::span<const Vec3> points, double eps, std::size_t min_pts);

Points3 to_map_frame(std::span<const Vec3> points, const ingest::Pose& pose);

/// The full per-frame path: dynamic filtering, projection, denoising and the
/// move into the map frame. Output order follows detection order.
std::vector<ObjectObservation> extract_observations(const ingest::FrameRecord& frame,
                                                    const ingest::SensorCalibration& calib,
                                                    const ProjectionConfig& config);

}  // namespace opengraph::projection
