#pragma once

#include "opengraph/config.hpp"
#include "opengraph/hierarchy.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace opengraph {

struct BuildReport {
  std::size_t frames = 0;
  std::size_t skipped_frames = 0;
  std::size_t detections = 0;
  std::size_t observations = 0;
  std::size_t objects = 0;
  std::vector<std::string> warnings;
};

/// Catalog from the manifest class list; classes without embeddings are
/// hash-embedded when the manifest's embedder is "hash".
hierarchy::ClassCatalog catalog_from_manifest(const ingest::Manifest& manifest);

/// Ingest, per-frame projection and fusion, lane extraction and assembly.
hierarchy::HierarchicalGraph build_map(const std::filesystem::path& data_dir, const RunConfig& config,
                                       BuildReport* report = nullptr);

/// Lane graph from the poses of a sequence directory.
lanes::LaneGraph build_lane_graph_from_dir(const std::filesystem::path& data_dir, const RunConfig& config);

std::string lane_graph_json(const lanes::LaneGraph& graph);

}  // namespace opengraph
