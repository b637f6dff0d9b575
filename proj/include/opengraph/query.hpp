#pragma once

#include "opengraph/hierarchy.hpp"
#include "opengraph/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace opengraph::query {

using hierarchy::HierarchicalGraph;

struct RetrievalHit {
  std::int64_t id = 0;
  double score = 0.0;
  std::string caption;
};

struct RetrievalResult {
  std::size_t k = 0;
  std::vector<RetrievalHit> hits;
};

/// Ranks instances by cosine to the (normalised) query; ties by id.
RetrievalResult retrieve(const HierarchicalGraph& graph, const Embedding& query, std::size_t k);

inline constexpr std::uint16_t kUnlabeled = 0xFFFF;
inline constexpr const char* kLabeledCloudFormat = "opengraph-labels/1";

struct LabeledCloud {
  std::vector<Eigen::Vector3f> points;
  std::vector<std::uint16_t> labels;
  std::vector<std::string> class_names;
  std::vector<hierarchy::Color> colors;
};

struct SegmentationResult {
  LabeledCloud cloud;
  std::vector<std::size_t> class_counts;
  std::size_t unlabeled = 0;
};

/// Labels every retained point with the class its instance gets under
/// `catalog` (which may differ from the graph's own catalog).
SegmentationResult semantic_segmentation(const HierarchicalGraph& graph,
                                         const hierarchy::ClassCatalog& catalog);

/// One JSON header line, then count × (3 float32 + uint16) little-endian records.
void write_labeled_cloud(const LabeledCloud& cloud, const std::filesystem::path& path);
LabeledCloud read_labeled_cloud(const std::filesystem::path& path);

struct RelationConstraint {
  std::string relation;
  std::int32_t class_id = 0;
};

struct LocateHit {
  std::int64_t segment = 0;
  hierarchy::SegmentKind kind = hierarchy::SegmentKind::straight;
  std::size_t score = 0;
};

/// Segments of `kind` (any kind when nullopt) scored by how many linked
/// instances satisfy each constraint through an instance-layer edge. With
/// constraints, zero-score segments are dropped; without, all matching
/// segments come back in id order.
std::vector<LocateHit> locate(const HierarchicalGraph& graph,
                              std::optional<hierarchy::SegmentKind> kind,
                              std::span<const RelationConstraint> constraints);

struct PlanResult {
  bool found = false;
  std::vector<std::size_t> nodes;
  double length = 0.0;
};

/// Lane nodes a plan endpoint stands for: "N<k>" is lane node k, "S<k>" a
/// node segment's node or both end nodes of a straight segment.
std::vector<std::size_t> endpoint_nodes(const HierarchicalGraph& graph, std::string_view ref);

/// Shortest lane-graph path over every start/goal node pair.
PlanResult plan_path(const HierarchicalGraph& graph, std::string_view start, std::string_view goal);

struct MapPatch {
  enum class Op { remove, replace_caption, replace_points };
  Op op = Op::remove;
  std::int64_t target = 0;
  std::string caption;
  /// New embedding for replace_caption; when absent the graph's embedder
  /// must be "hash" so the caption can be embedded locally.
  std::optional<Embedding> embedding;
  Points3 points;
};

/// Returns a patched copy; `graph` is not modified.
HierarchicalGraph apply_patch(const HierarchicalGraph& graph, const MapPatch& patch);

/// JSON for the CLI and for external re-ranking / relation labelling.
std::string retrieval_json(const RetrievalResult& result);
std::string locate_json(const HierarchicalGraph& graph, std::span<const LocateHit> hits);
std::string plan_json(const PlanResult& result);
/// Captions, boxes and current relations of every instance.
std::string instances_json(const HierarchicalGraph& graph);

}  // namespace opengraph::query
