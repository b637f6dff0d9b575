#include "opengraph/projection.hpp"

#include "opengraph/geom.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <limits>

namespace opengraph::projection {

void ProjectionConfig::validate() const {
  if (!(denoise_eps > 0.0)) throw InvalidArgument("projection: denoise_eps must be positive");
  if (denoise_min_pts < 1) throw InvalidArgument("projection: denoise_min_pts must be >= 1");
}

std::optional<Pixel> project_point(const Vec3& lidar_point, const ingest::SensorCalibration& calib) {
  const Eigen::Vector4d cam = calib.lidar_to_camera * lidar_point.homogeneous();
  if (!(cam.z() > 0.0)) return std::nullopt;
  const Eigen::Vector3d img = calib.camera_projection * cam;
  if (!(img.z() > 0.0)) return std::nullopt;
  const double u = std::floor(img.x() / img.z() + 0.5);
  const double v = std::floor(img.y() / img.z() + 0.5);
  if (u < 0.0 || v < 0.0 || u >= calib.image_width || v >= calib.image_height) {
    return std::nullopt;
  }
  return Pixel{static_cast<int>(u), static_cast<int>(v)};
}

ingest::PointCloud filter_dynamic(const ingest::PointCloud& cloud) {
  if (cloud.dynamic.empty()) return cloud;
  ingest::PointCloud out;
  const bool has_intensity = !cloud.intensity.empty();
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    if (cloud.dynamic[i]) continue;
    out.points.push_back(cloud.points[i]);
    if (has_intensity) out.intensity.push_back(cloud.intensity[i]);
  }
  return out;
}

std::vector<std::vector<std::size_t>> project_and_mask(const ingest::PointCloud& cloud,
                                                       const ingest::SensorCalibration& calib,
                                                       std::span<const ingest::Bitmask> masks) {
  std::vector<std::vector<std::size_t>> members(masks.size());
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const auto px = project_point(cloud.points[i], calib);
    if (!px) continue;
    for (std::size_t m = 0; m < masks.size(); ++m) {
      const ingest::Bitmask& mask = masks[m];
      if (px->u < mask.width && px->v < mask.height && mask.test(px->u, px->v)) {
        members[m].push_back(i);
      }
    }
  }
  return members;
}

Points3 denoise_object_points(std::span<const Vec3> points, double eps, std::size_t min_pts) {
  const std::vector<int> labels = geom::dbscan<3>(points, eps, min_pts);
  int clusters = 0;
  for (int l : labels) clusters = std::max(clusters, l + 1);
  if (clusters == 0) return {};

  std::vector<std::size_t> sizes(static_cast<std::size_t>(clusters), 0);
  Vec3 centroid = Vec3::Zero();
  std::size_t clustered = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == geom::kNoise) continue;
    ++sizes[static_cast<std::size_t>(labels[i])];
    centroid += points[i];
    ++clustered;
  }
  centroid /= static_cast<double>(clustered);

  const std::size_t largest = *std::max_element(sizes.begin(), sizes.end());
  int keep = -1;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == geom::kNoise || sizes[static_cast<std::size_t>(labels[i])] != largest) continue;
    const double d = (points[i] - centroid).squaredNorm();
    if (d < best) {
      best = d;
      keep = labels[i];
    }
  }

  Points3 out;
  out.reserve(largest);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == keep) out.push_back(points[i]);
  }
  return out;
}

Points3 to_map_frame(std::span<const Vec3> points, const ingest::Pose& pose) {
  const Eigen::Matrix3d r = pose.rotation();
  const Vec3 t = pose.translation();
  Points3 out;
  out.reserve(points.size());
  for (const Vec3& p : points) out.push_back(r * p + t);
  return out;
}

std::vector<ObjectObservation> extract_observations(const ingest::FrameRecord& frame,
                                                    const ingest::SensorCalibration& calib,
                                                    const ProjectionConfig& config) {
  const ingest::PointCloud cloud = filter_dynamic(frame.cloud);
  std::vector<ingest::Bitmask> masks;
  masks.reserve(frame.detections.size());
  for (const ingest::Detection& d : frame.detections) masks.push_back(d.mask);
  const auto members = project_and_mask(cloud, calib, masks);

  std::vector<ObjectObservation> out;
  for (std::size_t m = 0; m < members.size(); ++m) {
    Points3 raw;
    raw.reserve(members[m].size());
    for (std::size_t idx : members[m]) raw.push_back(cloud.points[idx]);
    Points3 kept = denoise_object_points(raw, config.denoise_eps, config.denoise_min_pts);
    if (kept.size() < config.min_object_points) continue;
    out.push_back({to_map_frame(kept, frame.pose), frame.detections[m].caption,
                   frame.detections[m].embedding});
  }
  return out;
}

}  // namespace opengraph::projection
