#include "opengraph/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace opengraph::hierarchy {

namespace {

constexpr Color kPalette[] = {
    {245, 150, 100}, {255, 0, 255},   {75, 0, 75},    {0, 200, 255},  {50, 120, 255},
    {0, 175, 0},     {150, 240, 255}, {0, 0, 255},    {245, 230, 100}, {150, 60, 30},
    {180, 30, 80},   {255, 0, 0},     {30, 30, 255},  {200, 40, 255}, {90, 30, 150},
    {255, 150, 255}, {75, 0, 175},    {0, 60, 135},   {80, 240, 150}, {255, 200, 0},
};

bool is_node_kind(lanes::NodeKind k) { return k != lanes::NodeKind::breakpoint; }

SegmentKind segment_kind_of(lanes::NodeKind k) {
  switch (k) {
    case lanes::NodeKind::intersection: return SegmentKind::intersection;
    case lanes::NodeKind::t_intersection: return SegmentKind::t_intersection;
    case lanes::NodeKind::l_intersection: return SegmentKind::l_intersection;
    case lanes::NodeKind::breakpoint: break;
  }
  return SegmentKind::straight;
}

Vec2 path_centroid(const Points2& path) {
  double total = 0.0;
  Vec2 acc = Vec2::Zero();
  for (std::size_t i = 1; i < path.size(); ++i) {
    const double len = (path[i] - path[i - 1]).norm();
    acc += len * 0.5 * (path[i] + path[i - 1]);
    total += len;
  }
  if (total > 0.0) return acc / total;
  Vec2 sum = Vec2::Zero();
  for (const Vec2& p : path) sum += p;
  return path.empty() ? sum : Vec2(sum / static_cast<double>(path.size()));
}

}  // namespace

Color default_color(std::size_t class_index) {
  return kPalette[class_index % std::size(kPalette)];
}

std::optional<int> ClassCatalog::find(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

void ClassCatalog::validate() const {
  if (embeddings.size() != names.size() || colors.size() != names.size()) {
    throw DataError("class catalog: names, embeddings and colors differ in length");
  }
  std::set<std::string> seen;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (!seen.insert(names[i]).second) throw DataError("class catalog: duplicate name " + names[i]);
    if (std::abs(embeddings[i].cast<double>().norm() - 1.0) > 1e-4) {
      throw DataError("class catalog: embedding of '" + names[i] + "' is not unit length");
    }
    if (i > 0 && embeddings[i].size() != embeddings[0].size()) {
      throw DataError("class catalog: embeddings differ in dimension");
    }
  }
}

ClassCatalog ClassCatalog::from_entries(std::span<const ingest::ClassEntry> entries, int dim,
                                        const std::function<Embedding(const std::string&)>& embed) {
  ClassCatalog c;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const ingest::ClassEntry& e = entries[i];
    Embedding v;
    if (e.embedding) {
      v = *e.embedding;
    } else if (embed) {
      v = embed(e.name);
    } else {
      throw DataError("class '" + e.name + "' has no embedding and no embedder is available");
    }
    if (v.size() != dim) throw DataError("class '" + e.name + "' embedding has wrong dimension");
    if (v.norm() == 0.0) throw DataError("class '" + e.name + "' embedding is zero");
    c.names.push_back(e.name);
    c.embeddings.push_back(v.normalized().cast<float>());
    c.colors.push_back(e.color ? *e.color : default_color(i));
  }
  c.validate();
  return c;
}

std::string_view to_string(SegmentKind kind) {
  switch (kind) {
    case SegmentKind::intersection: return "intersection";
    case SegmentKind::t_intersection: return "t_intersection";
    case SegmentKind::l_intersection: return "l_intersection";
    case SegmentKind::straight: return "straight";
  }
  return "straight";
}

SegmentKind segment_kind_from_string(std::string_view name) {
  if (name == "intersection") return SegmentKind::intersection;
  if (name == "t_intersection") return SegmentKind::t_intersection;
  if (name == "l_intersection") return SegmentKind::l_intersection;
  if (name == "straight" || name == "straight_roadway") return SegmentKind::straight;
  throw DataError("unknown segment kind '" + std::string(name) + "'");
}

void HierarchyConfig::validate() const {
  if (!(voxel > 0.0)) throw InvalidArgument("hierarchy: voxel must be positive");
  if (!(adjacency_gap >= 0.0) || !(contact_tolerance >= 0.0)) {
    throw InvalidArgument("hierarchy: relation thresholds must be non-negative");
  }
}

std::string geometric_relation(const Instance& a, const Instance& b, const HierarchyConfig& cfg) {
  const bool plan_overlap = a.aabb.min.x() < b.aabb.max.x() && b.aabb.min.x() < a.aabb.max.x() &&
                            a.aabb.min.y() < b.aabb.max.y() && b.aabb.min.y() < a.aabb.max.y();
  if (plan_overlap) {
    // The upper box's base must sit within the tolerance of the lower box's top.
    auto rests_on = [&](const Instance& top, const Instance& base) {
      return std::abs(top.aabb.min.z() - base.aabb.max.z()) <= cfg.contact_tolerance &&
             top.aabb.center().z() > base.aabb.center().z();
    };
    if (rests_on(a, b)) return "on";
    if (rests_on(b, a)) return "under";
  }
  if (geom::aabb_gap(a.aabb, b.aabb) < cfg.adjacency_gap) return "adjacent to";
  return "near";
}

std::string inverse_relation(std::string_view relation) {
  if (relation == "on") return "under";
  if (relation == "under") return "on";
  return std::string(relation);
}

const Instance* HierarchicalGraph::find_instance(std::int64_t id) const {
  for (const Instance& i : instances) {
    if (i.id == id) return &i;
  }
  return nullptr;
}

const Segment* HierarchicalGraph::find_segment(std::int64_t id) const {
  for (const Segment& s : segments) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

PointCloudLayer build_point_cloud_layer(std::span<const mapping::MapObject> objects,
                                        std::span<const std::int32_t> class_ids, double voxel) {
  if (class_ids.size() != objects.size()) {
    throw InvalidArgument("build_point_cloud_layer: one class id per object required");
  }
  PointCloudLayer layer;
  for (std::size_t k = 0; k < objects.size(); ++k) {
    for (const Vec3& p : geom::voxel_downsample(objects[k].points, voxel)) {
      layer.points.push_back(p.cast<float>());
      layer.instance_ids.push_back(objects[k].id);
      layer.class_ids.push_back(class_ids[k]);
    }
  }
  return layer;
}

std::int32_t classify_embedding(const Eigen::Ref<const Eigen::VectorXd>& embedding,
                                const ClassCatalog& catalog) {
  std::int32_t best = -1;
  double best_sim = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < catalog.size(); ++c) {
    const double s = geom::cosine_similarity(embedding, catalog.embeddings[c]);
    if (s > best_sim) {
      best_sim = s;
      best = static_cast<std::int32_t>(c);
    }
  }
  return best;
}

std::vector<std::int32_t> classify_objects(std::span<const mapping::MapObject> objects,
                                           const ClassCatalog& catalog) {
  std::vector<std::int32_t> out;
  out.reserve(objects.size());
  for (const auto& o : objects) out.push_back(classify_embedding(o.embedding, catalog));
  return out;
}

std::vector<InstanceEdge> build_instance_layer(std::span<const Instance> instances,
                                               const RelationLabeler& labeler) {
  const auto tree = geom::dense_minimum_spanning_tree(instances.size(), [&](std::size_t i, std::size_t j) {
    const double dist = (instances[i].centroid - instances[j].centroid).norm();
    return dist * (1.0 - geom::aabb_iou(instances[i].aabb, instances[j].aabb));
  });
  std::vector<InstanceEdge> edges;
  edges.reserve(tree.size());
  for (const auto& e : tree) {
    const Instance& a = instances[e.u];
    const Instance& b = instances[e.v];
    edges.push_back({a.id, b.id, labeler ? labeler(a, b) : geometric_relation(a, b, {})});
  }
  std::sort(edges.begin(), edges.end(), [](const InstanceEdge& x, const InstanceEdge& y) {
    return std::tie(x.a, x.b) < std::tie(y.a, y.b);
  });
  return edges;
}

std::vector<Segment> build_segment_layer(const lanes::LaneGraph& lane_graph) {
  std::vector<Segment> segments;
  std::int64_t next_id = 0;
  for (std::size_t k = 0; k < lane_graph.nodes.size(); ++k) {
    const lanes::LaneNode& node = lane_graph.nodes[k];
    if (!is_node_kind(node.kind)) continue;
    Segment s;
    s.id = next_id++;
    s.kind = segment_kind_of(node.kind);
    s.paths = node.sections;
    if (s.paths.empty()) s.paths.push_back({node.position});
    s.centroid = node.position;
    s.lane_node = k;
    segments.push_back(std::move(s));
  }
  for (std::size_t k = 0; k < lane_graph.edges.size(); ++k) {
    const lanes::LaneEdge& edge = lane_graph.edges[k];
    Points2 path = edge.polyline;
    if (path.size() > 2 && is_node_kind(lane_graph.nodes[edge.b].kind)) path.pop_back();
    if (path.size() > 2 && is_node_kind(lane_graph.nodes[edge.a].kind)) path.erase(path.begin());
    Segment s;
    s.id = next_id++;
    s.kind = SegmentKind::straight;
    s.centroid = path_centroid(path);
    s.paths.push_back(std::move(path));
    s.lane_edge = k;
    segments.push_back(std::move(s));
  }
  return segments;
}

std::optional<std::int64_t> nearest_segment(const Vec2& p, std::span<const Segment> segments) {
  std::optional<std::int64_t> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (const Segment& s : segments) {
    double d = std::numeric_limits<double>::infinity();
    for (const Points2& path : s.paths) d = std::min(d, lanes::point_polyline_distance(p, path));
    if (d < best_d || (d == best_d && best && s.id < *best)) {
      best_d = d;
      best = s.id;
    }
  }
  return best;
}

void relink(HierarchicalGraph& graph, const RelationLabeler& labeler) {
  const HierarchyConfig cfg = graph.config;
  const RelationLabeler label = labeler ? labeler : [cfg](const Instance& a, const Instance& b) {
    return geometric_relation(a, b, cfg);
  };
  graph.instance_edges = build_instance_layer(graph.instances, label);
  graph.instance_segment.clear();
  if (!graph.segments.empty()) {
    for (const Instance& inst : graph.instances) {
      const auto seg = nearest_segment(inst.centroid.head<2>(), graph.segments);
      if (seg) graph.instance_segment[inst.id] = *seg;
    }
  }
}

HierarchicalGraph assemble(std::span<const mapping::MapObject> objects,
                           const lanes::LaneGraph& lane_graph, const ClassCatalog& catalog,
                           const AssembleOptions& options) {
  options.config.validate();
  if (!catalog.empty()) catalog.validate();

  HierarchicalGraph g;
  g.config = options.config;
  g.catalog = catalog;
  g.embedder = options.embedder;
  if (!objects.empty()) {
    g.embedding_dim = static_cast<int>(objects.front().embedding.size());
  } else if (!catalog.empty()) {
    g.embedding_dim = static_cast<int>(catalog.embeddings.front().size());
  }

  std::vector<std::int32_t> classes(objects.size(), -1);
  if (!catalog.empty()) classes = classify_objects(objects, catalog);

  g.point_cloud = build_point_cloud_layer(objects, classes, options.config.voxel);
  for (std::size_t k = 0; k < objects.size(); ++k) {
    const mapping::MapObject& o = objects[k];
    Instance inst;
    inst.id = o.id;
    inst.centroid = o.centroid;
    inst.aabb = o.aabb;
    inst.caption = o.caption;
    inst.embedding = o.embedding.cast<float>();
    inst.class_id = classes[k];
    inst.observation_count = o.observation_count;
    g.instances.push_back(std::move(inst));
  }
  std::sort(g.instances.begin(), g.instances.end(),
            [](const Instance& a, const Instance& b) { return a.id < b.id; });

  if (lane_graph.empty()) {
    g.missing_layers.push_back("lane_graph");
    g.missing_layers.push_back("segment");
  } else {
    g.lane_graph = lane_graph;
    g.segments = build_segment_layer(lane_graph);
    for (const Segment& s : g.segments) g.environment_segments.push_back(s.id);
  }
  if (objects.empty()) {
    g.missing_layers.push_back("point_cloud");
    g.missing_layers.push_back("instance");
  }
  relink(g, options.labeler);
  return g;
}

std::vector<std::string> validate(const HierarchicalGraph& g) {
  std::vector<std::string> issues;
  auto fail = [&](const std::string& s) { issues.push_back(s); };

  std::set<std::int64_t> ids;
  for (std::size_t k = 0; k < g.instances.size(); ++k) {
    const Instance& inst = g.instances[k];
    if (!ids.insert(inst.id).second) fail("duplicate instance id " + std::to_string(inst.id));
    if (k > 0 && g.instances[k - 1].id >= inst.id) fail("instances not sorted by id");
    if (inst.embedding.size() != g.embedding_dim) {
      fail("instance " + std::to_string(inst.id) + " embedding has wrong dimension");
    } else if (std::abs(inst.embedding.cast<double>().norm() - 1.0) > 1e-4) {
      fail("instance " + std::to_string(inst.id) + " embedding is not unit length");
    }
    if (!inst.aabb.valid()) fail("instance " + std::to_string(inst.id) + " has an inverted box");
    const bool class_ok = g.catalog.empty() ? inst.class_id == -1
                                            : inst.class_id >= 0 &&
                                                  inst.class_id < static_cast<int>(g.catalog.size());
    if (!class_ok) fail("instance " + std::to_string(inst.id) + " has an invalid class id");
  }

  const PointCloudLayer& pc = g.point_cloud;
  if (pc.instance_ids.size() != pc.points.size() || pc.class_ids.size() != pc.points.size()) {
    fail("point cloud layer arrays differ in length");
  } else {
    for (std::size_t i = 0; i < pc.points.size(); ++i) {
      const Instance* inst = g.find_instance(pc.instance_ids[i]);
      if (!inst) {
        fail("point " + std::to_string(i) + " links to missing instance " +
             std::to_string(pc.instance_ids[i]));
        break;
      }
      if (inst->class_id != pc.class_ids[i]) {
        fail("point " + std::to_string(i) + " class differs from its instance");
        break;
      }
    }
  }

  const std::size_t n = g.instances.size();
  if (g.instance_edges.size() != (n == 0 ? 0 : n - 1)) {
    fail("instance layer has " + std::to_string(g.instance_edges.size()) + " edges, expected " +
         std::to_string(n == 0 ? 0 : n - 1));
  }
  std::map<std::int64_t, std::int64_t> parent;
  for (std::int64_t id : ids) parent[id] = id;
  std::function<std::int64_t(std::int64_t)> root = [&](std::int64_t x) {
    return parent[x] == x ? x : parent[x] = root(parent[x]);
  };
  for (const InstanceEdge& e : g.instance_edges) {
    if (!ids.count(e.a) || !ids.count(e.b) || e.a == e.b) {
      fail("instance edge " + std::to_string(e.a) + "-" + std::to_string(e.b) + " is invalid");
      continue;
    }
    parent[root(e.a)] = root(e.b);
  }
  std::set<std::int64_t> roots;
  for (std::int64_t id : ids) roots.insert(root(id));
  if (roots.size() > 1) fail("instance layer is not connected");

  std::set<std::int64_t> seg_ids;
  for (const Segment& s : g.segments) {
    if (!seg_ids.insert(s.id).second) fail("duplicate segment id " + std::to_string(s.id));
  }
  if (std::set<std::int64_t>(g.environment_segments.begin(), g.environment_segments.end()) !=
          seg_ids ||
      g.environment_segments.size() != seg_ids.size()) {
    fail("environment node does not link every segment exactly once");
  }
  if (!g.segments.empty()) {
    if (g.instance_segment.size() != n) fail("not every instance links to a segment");
    for (const auto& [inst, seg] : g.instance_segment) {
      if (!ids.count(inst)) fail("segment link from missing instance " + std::to_string(inst));
      if (!seg_ids.count(seg)) fail("instance " + std::to_string(inst) + " links to missing segment");
    }
  } else if (!g.instance_segment.empty()) {
    fail("instance -> segment links exist without a segment layer");
  }

  for (const lanes::LaneEdge& e : g.lane_graph.edges) {
    if (e.a >= g.lane_graph.nodes.size() || e.b >= g.lane_graph.nodes.size()) {
      fail("lane edge references a missing node");
    }
    if (e.polyline.size() < 2) fail("lane edge polyline has fewer than two points");
  }
  return issues;
}

}  // namespace opengraph::hierarchy
