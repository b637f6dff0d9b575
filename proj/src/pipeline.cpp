#include "opengraph/pipeline.hpp"

#include "opengraph/synthetic.hpp"

#include <json.hpp>

namespace opengraph {

namespace fs = std::filesystem;

hierarchy::ClassCatalog catalog_from_manifest(const ingest::Manifest& manifest) {
  if (manifest.class_list.empty()) return {};
  std::function<Embedding(const std::string&)> embed;
  if (manifest.embedder == "hash") {
    const int dim = manifest.embedding_dim;
    embed = [dim](const std::string& name) { return synthetic::hash_embedding(name, dim); };
  }
  return hierarchy::ClassCatalog::from_entries(manifest.class_list, manifest.embedding_dim, embed);
}

namespace {

lanes::LaneGraph lanes_or_empty(const std::vector<ingest::Pose>& trajectory, const RunConfig& config,
                                std::vector<std::string>& warnings) {
  try {
    return lanes::extract_lane_graph(trajectory, config.lane);
  } catch (const InvalidArgument& e) {
    warnings.push_back(std::string("lane graph not built: ") + e.what());
    return {};
  }
}

}  // namespace

hierarchy::HierarchicalGraph build_map(const fs::path& data_dir, const RunConfig& config,
                                       BuildReport* report) {
  config.validate();
  ingest::FrameStream stream = ingest::load_sequence(data_dir, config.ingest);
  const hierarchy::ClassCatalog catalog = catalog_from_manifest(stream.manifest());

  BuildReport local;
  mapping::ObjectMap map(config.association);
  while (auto frame = stream.next()) {
    ++local.frames;
    local.detections += frame->detections.size();
    const auto observations = projection::extract_observations(*frame, stream.calibration(), config.projection);
    local.observations += observations.size();
    map.integrate(observations);
    log(LogLevel::debug, "frame " + std::to_string(frame->index) + ": " +
                             std::to_string(observations.size()) + " observations, " +
                             std::to_string(map.size()) + " objects");
  }
  local.skipped_frames = stream.skipped_frames();
  local.warnings = stream.warnings();
  local.objects = map.size();

  const lanes::LaneGraph lane_graph = lanes_or_empty(stream.trajectory(), config, local.warnings);
  hierarchy::AssembleOptions options;
  options.config = config.hierarchy;
  options.embedder = stream.manifest().embedder;
  hierarchy::HierarchicalGraph graph = hierarchy::assemble(map.objects(), lane_graph, catalog, options);
  if (graph.embedding_dim == 0) graph.embedding_dim = stream.manifest().embedding_dim;

  for (const std::string& w : local.warnings) log(LogLevel::warn, w);
  log(LogLevel::info, "built map: " + std::to_string(local.frames) + " frames, " +
                          std::to_string(local.objects) + " objects, " +
                          std::to_string(graph.segments.size()) + " segments");
  if (report) *report = std::move(local);
  return graph;
}

lanes::LaneGraph build_lane_graph_from_dir(const fs::path& data_dir, const RunConfig& config) {
  config.validate();
  const std::vector<ingest::Pose> poses = ingest::load_poses(data_dir / "poses.txt");
  return lanes::extract_lane_graph(poses, config.lane);
}

std::string lane_graph_json(const lanes::LaneGraph& graph) {
  using nlohmann::json;
  json nodes = json::array();
  for (std::size_t k = 0; k < graph.nodes.size(); ++k) {
    const auto& n = graph.nodes[k];
    nodes.push_back({{"id", k},
                     {"position", {n.position.x(), n.position.y()}},
                     {"kind", lanes::to_string(n.kind)},
                     {"degree", graph.degree(k)},
                     {"interior", n.interior}});
  }
  json edges = json::array();
  for (const auto& e : graph.edges) {
    json polyline = json::array();
    for (const Vec2& p : e.polyline) polyline.push_back({p.x(), p.y()});
    edges.push_back({{"a", e.a}, {"b", e.b}, {"length", e.length}, {"polyline", polyline}});
  }
  return json{{"nodes", nodes}, {"edges", edges}}.dump(2);
}

}  // namespace opengraph
