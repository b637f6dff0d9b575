#include "opengraph/hierarchy.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace opengraph::hierarchy {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kIndexFile = "index.json";

template <typename T>
void append_le(std::string& out, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.append(bytes, sizeof(T));
}

template <typename T>
T read_le(const char* p) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

struct BlobWriter {
  fs::path dir;
  json index = json::object();

  void write(const std::string& name, const std::string& dtype, std::vector<std::size_t> shape,
             const std::string& bytes) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("cannot write " + (dir / name).string());
    index[name] = {{"dtype", dtype}, {"shape", shape}, {"bytes", bytes.size()}};
  }
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Reads a blob listed in the index and checks its declared size and shape.
std::string read_blob(const fs::path& dir, const json& blobs, const std::string& name,
                      std::size_t elem_size, std::size_t expected_count) {
  if (!blobs.contains(name)) throw DataError("map container: missing blob entry " + name);
  const json& meta = blobs.at(name);
  std::size_t count = 1;
  for (const auto& d : meta.at("shape")) count *= d.get<std::size_t>();
  if (count != expected_count) throw DataError("map container: blob " + name + " has wrong shape");
  const std::size_t declared = meta.at("bytes").get<std::size_t>();
  std::string bytes = read_file(dir / name);
  if (declared != count * elem_size || bytes.size() != declared) {
    throw DataError("map container: blob " + name + " is truncated (expected " +
                    std::to_string(count * elem_size) + " bytes, found " +
                    std::to_string(bytes.size()) + ")");
  }
  return bytes;
}

json vec_json(const Vec2& v) { return json::array({v.x(), v.y()}); }
json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec2 vec2_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw DataError("map container: expected a 2-vector");
  return {j[0].get<double>(), j[1].get<double>()};
}
Vec3 vec3_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw DataError("map container: expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json path_json(const Points2& path) {
  json out = json::array();
  for (const Vec2& p : path) out.push_back(vec_json(p));
  return out;
}
Points2 path_from(const json& j) {
  Points2 out;
  for (const auto& p : j) out.push_back(vec2_from(p));
  return out;
}

std::string embeddings_blob(const std::vector<EmbeddingF>& rows, int dim) {
  std::string bytes;
  for (const EmbeddingF& e : rows) {
    if (e.size() != dim) throw InvalidArgument("save: embedding dimension mismatch");
    for (int k = 0; k < dim; ++k) append_le<float>(bytes, e[k]);
  }
  return bytes;
}

std::vector<EmbeddingF> embeddings_from(const std::string& bytes, std::size_t rows, int dim) {
  std::vector<EmbeddingF> out(rows, EmbeddingF(dim));
  const char* p = bytes.data();
  for (std::size_t r = 0; r < rows; ++r) {
    for (int k = 0; k < dim; ++k, p += 4) out[r][k] = read_le<float>(p);
  }
  return out;
}

HierarchicalGraph parse(const fs::path& dir) {
  json index;
  try {
    index = json::parse(read_file(dir / kIndexFile));
  } catch (const json::exception& e) {
    throw DataError("map container: cannot parse index.json: " + std::string(e.what()));
  }
  const std::string found = index.value("format", std::string("<none>"));
  if (found != kMapFormat) {
    throw DataError("map container: unsupported format version (expected " +
                    std::string(kMapFormat) + ", found " + found + ")");
  }

  HierarchicalGraph g;
  g.format = found;
  const json& cfg = index.at("config");
  g.config.voxel = cfg.at("voxel").get<double>();
  g.config.adjacency_gap = cfg.at("adjacency_gap").get<double>();
  g.config.contact_tolerance = cfg.at("contact_tolerance").get<double>();
  g.embedding_dim = index.at("embedding_dim").get<int>();
  g.embedder = index.at("embedder").get<std::string>();
  const json& blobs = index.at("blobs");
  const auto dim = static_cast<std::size_t>(g.embedding_dim);

  const json& classes = index.at("classes");
  for (const auto& c : classes) {
    g.catalog.names.push_back(c.at("name").get<std::string>());
    g.catalog.colors.push_back(c.at("color").get<Color>());
  }
  if (!classes.empty()) {
    const std::string bytes =
        read_blob(dir, blobs, "class_embeddings.f32", 4, classes.size() * dim);
    g.catalog.embeddings = embeddings_from(bytes, classes.size(), g.embedding_dim);
  }

  const auto n_points = index.at("point_count").get<std::size_t>();
  {
    const std::string xyz = read_blob(dir, blobs, "points.f32", 4, n_points * 3);
    const std::string ids = read_blob(dir, blobs, "point_instance_ids.i64", 8, n_points);
    const std::string cls = read_blob(dir, blobs, "point_class_ids.i32", 4, n_points);
    for (std::size_t i = 0; i < n_points; ++i) {
      const char* p = xyz.data() + 12 * i;
      g.point_cloud.points.emplace_back(read_le<float>(p), read_le<float>(p + 4),
                                        read_le<float>(p + 8));
      g.point_cloud.instance_ids.push_back(read_le<std::int64_t>(ids.data() + 8 * i));
      g.point_cloud.class_ids.push_back(read_le<std::int32_t>(cls.data() + 4 * i));
    }
  }

  const json& instances = index.at("instances");
  std::vector<EmbeddingF> embeddings;
  if (!instances.empty()) {
    const std::string bytes =
        read_blob(dir, blobs, "instance_embeddings.f32", 4, instances.size() * dim);
    embeddings = embeddings_from(bytes, instances.size(), g.embedding_dim);
  }
  for (std::size_t k = 0; k < instances.size(); ++k) {
    const json& j = instances[k];
    Instance inst;
    inst.id = j.at("id").get<std::int64_t>();
    inst.centroid = vec3_from(j.at("centroid"));
    inst.aabb.min = vec3_from(j.at("aabb_min"));
    inst.aabb.max = vec3_from(j.at("aabb_max"));
    inst.caption = j.at("caption").get<std::string>();
    inst.class_id = j.at("class_id").get<std::int32_t>();
    inst.observation_count = j.at("observation_count").get<std::int64_t>();
    inst.embedding = std::move(embeddings[k]);
    g.instances.push_back(std::move(inst));
  }
  for (const auto& e : index.at("instance_edges")) {
    g.instance_edges.push_back(
        {e.at("a").get<std::int64_t>(), e.at("b").get<std::int64_t>(), e.at("relation").get<std::string>()});
  }

  const json& lg = index.at("lane_graph");
  for (const auto& n : lg.at("nodes")) {
    lanes::LaneNode node;
    node.position = vec2_from(n.at("position"));
    node.kind = lanes::node_kind_from_string(n.at("kind").get<std::string>());
    node.members = n.at("members").get<std::vector<std::size_t>>();
    node.interior = n.at("interior").get<bool>();
    for (const auto& s : n.at("sections")) node.sections.push_back(path_from(s));
    g.lane_graph.nodes.push_back(std::move(node));
  }
  for (const auto& e : lg.at("edges")) {
    lanes::LaneEdge edge;
    edge.a = e.at("a").get<std::size_t>();
    edge.b = e.at("b").get<std::size_t>();
    edge.polyline = path_from(e.at("polyline"));
    edge.length = e.at("length").get<double>();
    g.lane_graph.edges.push_back(std::move(edge));
  }

  for (const auto& s : index.at("segments")) {
    Segment seg;
    seg.id = s.at("id").get<std::int64_t>();
    seg.kind = segment_kind_from_string(s.at("kind").get<std::string>());
    for (const auto& p : s.at("paths")) seg.paths.push_back(path_from(p));
    seg.centroid = vec2_from(s.at("centroid"));
    if (!s.at("lane_node").is_null()) seg.lane_node = s.at("lane_node").get<std::size_t>();
    if (!s.at("lane_edge").is_null()) seg.lane_edge = s.at("lane_edge").get<std::size_t>();
    g.segments.push_back(std::move(seg));
  }
  g.environment_segments = index.at("environment").at("segments").get<std::vector<std::int64_t>>();
  for (const auto& link : index.at("instance_segment")) {
    g.instance_segment[link.at(0).get<std::int64_t>()] = link.at(1).get<std::int64_t>();
  }
  g.missing_layers = index.at("missing_layers").get<std::vector<std::string>>();
  return g;
}

}  // namespace

void save(const HierarchicalGraph& g, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());

  BlobWriter blobs{dir};
  const auto dim = static_cast<std::size_t>(g.embedding_dim);
  json index;
  index["format"] = kMapFormat;
  index["config"] = {{"voxel", g.config.voxel},
                     {"adjacency_gap", g.config.adjacency_gap},
                     {"contact_tolerance", g.config.contact_tolerance}};
  index["embedding_dim"] = g.embedding_dim;
  index["embedder"] = g.embedder;

  json classes = json::array();
  for (std::size_t c = 0; c < g.catalog.size(); ++c) {
    classes.push_back({{"name", g.catalog.names[c]}, {"color", g.catalog.colors[c]}});
  }
  index["classes"] = classes;
  if (!g.catalog.empty()) {
    blobs.write("class_embeddings.f32", "float32", {g.catalog.size(), dim},
                embeddings_blob(g.catalog.embeddings, g.embedding_dim));
  }

  const PointCloudLayer& pc = g.point_cloud;
  std::string xyz, ids, cls;
  for (std::size_t i = 0; i < pc.points.size(); ++i) {
    for (int k = 0; k < 3; ++k) append_le<float>(xyz, pc.points[i][k]);
    append_le<std::int64_t>(ids, pc.instance_ids.at(i));
    append_le<std::int32_t>(cls, pc.class_ids.at(i));
  }
  index["point_count"] = pc.points.size();
  blobs.write("points.f32", "float32", {pc.points.size(), 3}, xyz);
  blobs.write("point_instance_ids.i64", "int64", {pc.points.size()}, ids);
  blobs.write("point_class_ids.i32", "int32", {pc.points.size()}, cls);

  json instances = json::array();
  std::vector<EmbeddingF> embeddings;
  for (const Instance& inst : g.instances) {
    instances.push_back({{"id", inst.id},
                         {"centroid", vec_json(inst.centroid)},
                         {"aabb_min", vec_json(inst.aabb.min)},
                         {"aabb_max", vec_json(inst.aabb.max)},
                         {"caption", inst.caption},
                         {"class_id", inst.class_id},
                         {"observation_count", inst.observation_count}});
    embeddings.push_back(inst.embedding);
  }
  index["instances"] = instances;
  if (!g.instances.empty()) {
    blobs.write("instance_embeddings.f32", "float32", {g.instances.size(), dim},
                embeddings_blob(embeddings, g.embedding_dim));
  }
  json edges = json::array();
  for (const InstanceEdge& e : g.instance_edges) {
    edges.push_back({{"a", e.a}, {"b", e.b}, {"relation", e.relation}});
  }
  index["instance_edges"] = edges;

  json nodes = json::array();
  for (const lanes::LaneNode& n : g.lane_graph.nodes) {
    json sections = json::array();
    for (const Points2& s : n.sections) sections.push_back(path_json(s));
    nodes.push_back({{"position", vec_json(n.position)},
                     {"kind", lanes::to_string(n.kind)},
                     {"members", n.members},
                     {"interior", n.interior},
                     {"sections", sections}});
  }
  json lane_edges = json::array();
  for (const lanes::LaneEdge& e : g.lane_graph.edges) {
    lane_edges.push_back(
        {{"a", e.a}, {"b", e.b}, {"polyline", path_json(e.polyline)}, {"length", e.length}});
  }
  index["lane_graph"] = {{"nodes", nodes}, {"edges", lane_edges}};

  json segments = json::array();
  for (const Segment& s : g.segments) {
    json paths = json::array();
    for (const Points2& p : s.paths) paths.push_back(path_json(p));
    segments.push_back({{"id", s.id},
                        {"kind", to_string(s.kind)},
                        {"paths", paths},
                        {"centroid", vec_json(s.centroid)},
                        {"lane_node", s.lane_node ? json(*s.lane_node) : json(nullptr)},
                        {"lane_edge", s.lane_edge ? json(*s.lane_edge) : json(nullptr)}});
  }
  index["segments"] = segments;
  index["environment"] = {{"segments", g.environment_segments}};
  json links = json::array();
  for (const auto& [inst, seg] : g.instance_segment) links.push_back({inst, seg});
  index["instance_segment"] = links;
  index["missing_layers"] = g.missing_layers;
  index["blobs"] = blobs.index;

  std::ofstream out(dir / kIndexFile, std::ios::binary | std::ios::trunc);
  out << index.dump(1) << '\n';
  if (!out) throw DataError("cannot write " + (dir / kIndexFile).string());
}

HierarchicalGraph load(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("map container not found: " + dir.string());
  try {
    return parse(dir);
  } catch (const json::exception& e) {
    throw DataError("map container: malformed index.json: " + std::string(e.what()));
  }
}

}  // namespace opengraph::hierarchy
