#pragma once

#include "opengraph/geom.hpp"
#include "opengraph/ingest.hpp"
#include "opengraph/lane_graph.hpp"
#include "opengraph/object_map.hpp"
#include "opengraph/types.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace opengraph::hierarchy {

inline constexpr const char* kMapFormat = "opengraph-map/1";

using Color = std::array<std::uint8_t, 3>;
using EmbeddingF = Eigen::VectorXf;

/// Class names with one unit embedding each, from the same embedder as the
/// detections, plus display colours.
struct ClassCatalog {
  std::vector<std::string> names;
  std::vector<EmbeddingF> embeddings;
  std::vector<Color> colors;

  std::size_t size() const { return names.size(); }
  bool empty() const { return names.empty(); }
  std::optional<int> find(std::string_view name) const;
  void validate() const;

  /// Entries without an embedding are embedded with `embed` (typically the
  /// signed-hash embedder); missing colours come from a fixed palette.
  static ClassCatalog from_entries(std::span<const ingest::ClassEntry> entries, int dim,
                                   const std::function<Embedding(const std::string&)>& embed);
};

/// Colour palette used when a class has none (SemanticKITTI-like order).
Color default_color(std::size_t class_index);

struct PointCloudLayer {
  std::vector<Eigen::Vector3f> points;
  std::vector<std::int64_t> instance_ids;
  std::vector<std::int32_t> class_ids;

  std::size_t size() const { return points.size(); }
};

struct Instance {
  std::int64_t id = 0;
  Vec3 centroid = Vec3::Zero();
  geom::AxisAlignedBox aabb;
  std::string caption;
  EmbeddingF embedding;
  std::int32_t class_id = -1;
  std::int64_t observation_count = 0;
};

/// MST edge of the instance layer; `relation` reads "a <relation> b".
struct InstanceEdge {
  std::int64_t a = 0;
  std::int64_t b = 0;
  std::string relation;
};

enum class SegmentKind { intersection, t_intersection, l_intersection, straight };

std::string_view to_string(SegmentKind kind);
SegmentKind segment_kind_from_string(std::string_view name);

struct Segment {
  std::int64_t id = 0;
  SegmentKind kind = SegmentKind::straight;
  std::vector<Points2> paths;
  Vec2 centroid = Vec2::Zero();
  /// Lane node for node segments; nullopt for straight segments.
  std::optional<std::size_t> lane_node;
  /// Lane edge for straight segments.
  std::optional<std::size_t> lane_edge;
};

struct HierarchyConfig {
  double voxel = 0.2;
  /// AABB gap under which a pair is "adjacent to".
  double adjacency_gap = 1.0;
  /// Slack when deciding that one box rests on top of another.
  double contact_tolerance = 0.2;

  void validate() const;
};

/// Labels the relation of a to b for an instance-layer edge.
using RelationLabeler = std::function<std::string(const Instance& a, const Instance& b)>;

/// "on" / "under" when the boxes overlap in plan view and one sits on top,
/// "adjacent to" when the box gap is below adjacency_gap, else "near".
std::string geometric_relation(const Instance& a, const Instance& b, const HierarchyConfig& cfg);

/// The same relation read from the other end ("on" <-> "under").
std::string inverse_relation(std::string_view relation);

struct HierarchicalGraph {
  std::string format = kMapFormat;
  HierarchyConfig config;
  int embedding_dim = 0;
  std::string embedder;
  ClassCatalog catalog;

  PointCloudLayer point_cloud;
  lanes::LaneGraph lane_graph;
  std::vector<Instance> instances;
  std::vector<InstanceEdge> instance_edges;
  std::vector<Segment> segments;
  /// Environment layer: the single node links every segment id listed here.
  std::vector<std::int64_t> environment_segments;
  /// Instance id -> segment id.
  std::map<std::int64_t, std::int64_t> instance_segment;
  /// Layers that could not be built ("lane_graph", "segment", "instance").
  std::vector<std::string> missing_layers;

  const Instance* find_instance(std::int64_t id) const;
  const Segment* find_segment(std::int64_t id) const;
};

PointCloudLayer build_point_cloud_layer(std::span<const mapping::MapObject> objects,
                                        std::span<const std::int32_t> class_ids, double voxel);

/// Arg-max cosine class per object; ties go to the lowest class index.
std::vector<std::int32_t> classify_objects(std::span<const mapping::MapObject> objects,
                                           const ClassCatalog& catalog);
std::int32_t classify_embedding(const Eigen::Ref<const Eigen::VectorXd>& embedding,
                                const ClassCatalog& catalog);

/// MST over the complete instance graph weighted by
/// centroid distance × (1 − IoU), each edge labelled by `labeler`.
std::vector<InstanceEdge> build_instance_layer(std::span<const Instance> instances,
                                               const RelationLabeler& labeler);

/// Node segments (one per interior lane node, ids first) then one straight
/// segment per lane edge.
std::vector<Segment> build_segment_layer(const lanes::LaneGraph& lane_graph);

/// Segment whose paths come closest (in plan view) to `p`; lowest id on ties.
std::optional<std::int64_t> nearest_segment(const Vec2& p, std::span<const Segment> segments);

struct AssembleOptions {
  HierarchyConfig config;
  /// Defaults to geometric_relation with `config`.
  RelationLabeler labeler;
  std::string embedder;
};

HierarchicalGraph assemble(std::span<const mapping::MapObject> objects,
                           const lanes::LaneGraph& lane_graph, const ClassCatalog& catalog,
                           const AssembleOptions& options = {});

/// Recomputes instance edges and instance -> segment links in place.
void relink(HierarchicalGraph& graph, const RelationLabeler& labeler = {});

/// Lists every violated structural invariant; empty means valid.
std::vector<std::string> validate(const HierarchicalGraph& graph);

/// Writes the map container directory (index.json + little-endian blobs).
void save(const HierarchicalGraph& graph, const std::filesystem::path& dir);
/// Throws DataError on format/version mismatch or truncated content.
HierarchicalGraph load(const std::filesystem::path& dir);

}  // namespace opengraph::hierarchy
