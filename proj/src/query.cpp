#include "opengraph/query.hpp"

#include "opengraph/geom.hpp"
#include "opengraph/synthetic.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace opengraph::query {

namespace fs = std::filesystem;
using hierarchy::Instance;
using hierarchy::Segment;
using nlohmann::json;

RetrievalResult retrieve(const HierarchicalGraph& graph, const Embedding& query, std::size_t k) {
  if (query.size() != graph.embedding_dim) {
    throw InvalidArgument("retrieve: query has dimension " + std::to_string(query.size()) +
                          ", map has " + std::to_string(graph.embedding_dim));
  }
  const double norm = query.norm();
  if (!(norm > 0.0)) throw InvalidArgument("retrieve: zero query vector");
  const Embedding q = query / norm;

  RetrievalResult result;
  result.k = k;
  for (const Instance& inst : graph.instances) {
    result.hits.push_back({inst.id, geom::cosine_similarity(q, inst.embedding), inst.caption});
  }
  std::sort(result.hits.begin(), result.hits.end(), [](const RetrievalHit& a, const RetrievalHit& b) {
    return a.score != b.score ? a.score > b.score : a.id < b.id;
  });
  if (result.hits.size() > k) result.hits.resize(k);
  return result;
}

SegmentationResult semantic_segmentation(const HierarchicalGraph& graph,
                                         const hierarchy::ClassCatalog& catalog) {
  catalog.validate();
  if (catalog.size() >= kUnlabeled) throw InvalidArgument("semantic_segmentation: too many classes");
  std::map<std::int64_t, std::uint16_t> label_of;
  for (const Instance& inst : graph.instances) {
    std::int32_t c = -1;
    if (!catalog.empty()) {
      c = hierarchy::classify_embedding(inst.embedding.cast<double>(), catalog);
    }
    label_of[inst.id] = c < 0 ? kUnlabeled : static_cast<std::uint16_t>(c);
  }

  SegmentationResult out;
  out.cloud.class_names = catalog.names;
  out.cloud.colors = catalog.colors;
  out.class_counts.assign(catalog.size(), 0);
  const auto& pc = graph.point_cloud;
  for (std::size_t i = 0; i < pc.points.size(); ++i) {
    const auto it = label_of.find(pc.instance_ids[i]);
    const std::uint16_t label = it == label_of.end() ? kUnlabeled : it->second;
    out.cloud.points.push_back(pc.points[i]);
    out.cloud.labels.push_back(label);
    if (label == kUnlabeled) {
      ++out.unlabeled;
    } else {
      ++out.class_counts[label];
    }
  }
  return out;
}

void write_labeled_cloud(const LabeledCloud& cloud, const fs::path& path) {
  if (cloud.labels.size() != cloud.points.size()) {
    throw InvalidArgument("write_labeled_cloud: one label per point required");
  }
  json header;
  header["format"] = kLabeledCloudFormat;
  header["count"] = cloud.points.size();
  header["classes"] = cloud.class_names;
  header["colors"] = cloud.colors;
  header["unlabeled"] = kUnlabeled;

  std::string body;
  body.reserve(cloud.points.size() * 14);
  auto put = [&body](const auto value) {
    char bytes[sizeof(value)];
    std::memcpy(bytes, &value, sizeof(value));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(value));
    body.append(bytes, sizeof(value));
  };
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    put(cloud.points[i].x());
    put(cloud.points[i].y());
    put(cloud.points[i].z());
    put(cloud.labels[i]);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << header.dump() << '\n';
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out) throw DataError("cannot write " + path.string());
}

LabeledCloud read_labeled_cloud(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": bad labeled-cloud header: " + e.what());
  }
  if (header.value("format", std::string()) != kLabeledCloudFormat) {
    throw DataError(path.string() + ": not a labeled cloud (expected " +
                    std::string(kLabeledCloudFormat) + ")");
  }
  LabeledCloud cloud;
  const auto count = header.at("count").get<std::size_t>();
  cloud.class_names = header.at("classes").get<std::vector<std::string>>();
  cloud.colors = header.at("colors").get<std::vector<hierarchy::Color>>();

  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string body = ss.str();
  constexpr std::size_t kRecord = 14;
  if (body.size() != count * kRecord) {
    throw DataError(path.string() + ": expected " + std::to_string(count) + " records, found " +
                    std::to_string(body.size()) + " bytes");
  }
  auto get = [&body](std::size_t offset, auto& value) {
    char bytes[sizeof(value)];
    std::memcpy(bytes, body.data() + offset, sizeof(value));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(value));
    std::memcpy(&value, bytes, sizeof(value));
  };
  cloud.points.resize(count);
  cloud.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t o = i * kRecord;
    get(o, cloud.points[i].x());
    get(o + 4, cloud.points[i].y());
    get(o + 8, cloud.points[i].z());
    get(o + 12, cloud.labels[i]);
  }
  return cloud;
}

std::vector<LocateHit> locate(const HierarchicalGraph& graph,
                              std::optional<hierarchy::SegmentKind> kind,
                              std::span<const RelationConstraint> constraints) {
  std::map<std::int64_t, const Instance*> by_id;
  for (const Instance& inst : graph.instances) by_id[inst.id] = &inst;

  // (instance, relation read from it, class of the other end)
  std::set<std::tuple<std::int64_t, std::string, std::int32_t>> facts;
  for (const auto& e : graph.instance_edges) {
    const auto a = by_id.find(e.a);
    const auto b = by_id.find(e.b);
    if (a == by_id.end() || b == by_id.end()) continue;
    facts.emplace(e.a, e.relation, b->second->class_id);
    facts.emplace(e.b, hierarchy::inverse_relation(e.relation), a->second->class_id);
  }

  std::map<std::int64_t, std::vector<std::int64_t>> linked;
  for (const auto& [inst, seg] : graph.instance_segment) linked[seg].push_back(inst);

  std::vector<LocateHit> hits;
  for (const Segment& s : graph.segments) {
    if (kind && s.kind != *kind) continue;
    std::size_t score = 0;
    for (const RelationConstraint& c : constraints) {
      for (std::int64_t inst : linked[s.id]) {
        if (facts.count({inst, c.relation, c.class_id})) ++score;
      }
    }
    if (!constraints.empty() && score == 0) continue;
    hits.push_back({s.id, s.kind, score});
  }
  std::stable_sort(hits.begin(), hits.end(), [](const LocateHit& a, const LocateHit& b) {
    return a.score != b.score ? a.score > b.score : a.segment < b.segment;
  });
  return hits;
}

namespace {

std::int64_t parse_index(std::string_view text, std::string_view ref) {
  std::int64_t value = -1;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || value < 0) {
    throw InvalidArgument("bad plan endpoint '" + std::string(ref) + "' (use S<id> or N<id>)");
  }
  return value;
}

}  // namespace

std::vector<std::size_t> endpoint_nodes(const HierarchicalGraph& graph, std::string_view ref) {
  if (ref.size() < 2 || (ref[0] != 'S' && ref[0] != 'N')) {
    throw InvalidArgument("bad plan endpoint '" + std::string(ref) + "' (use S<id> or N<id>)");
  }
  const std::int64_t index = parse_index(ref.substr(1), ref);
  if (ref[0] == 'N') {
    if (static_cast<std::size_t>(index) >= graph.lane_graph.nodes.size()) {
      throw InvalidArgument("plan endpoint " + std::string(ref) + " does not exist");
    }
    return {static_cast<std::size_t>(index)};
  }
  const Segment* s = graph.find_segment(index);
  if (!s) throw InvalidArgument("plan endpoint " + std::string(ref) + " does not exist");
  if (s->lane_node) return {*s->lane_node};
  if (s->lane_edge && *s->lane_edge < graph.lane_graph.edges.size()) {
    const auto& e = graph.lane_graph.edges[*s->lane_edge];
    if (e.a == e.b) return {e.a};
    return {std::min(e.a, e.b), std::max(e.a, e.b)};
  }
  throw DataError("segment " + std::string(ref) + " is not tied to the lane graph");
}

PlanResult plan_path(const HierarchicalGraph& graph, std::string_view start, std::string_view goal) {
  const auto from = endpoint_nodes(graph, start);
  const auto to = endpoint_nodes(graph, goal);
  const geom::WeightedGraph wg = graph.lane_graph.as_weighted_graph();
  PlanResult best;
  for (std::size_t s : from) {
    for (std::size_t g : to) {
      const geom::PathResult r = geom::shortest_path(wg, s, g);
      if (!r.found) continue;
      if (!best.found || r.cost < best.length) {
        best.found = true;
        best.nodes = r.nodes;
        best.length = r.cost;
      }
    }
  }
  return best;
}

HierarchicalGraph apply_patch(const HierarchicalGraph& graph, const MapPatch& patch) {
  const auto it = std::find_if(graph.instances.begin(), graph.instances.end(),
                               [&](const Instance& i) { return i.id == patch.target; });
  if (it == graph.instances.end()) {
    throw InvalidArgument("apply_patch: unknown instance id " + std::to_string(patch.target));
  }
  const auto slot = static_cast<std::size_t>(it - graph.instances.begin());

  HierarchicalGraph out = graph;
  auto drop_points = [&out](std::int64_t id) {
    hierarchy::PointCloudLayer kept;
    const auto& pc = out.point_cloud;
    for (std::size_t i = 0; i < pc.points.size(); ++i) {
      if (pc.instance_ids[i] == id) continue;
      kept.points.push_back(pc.points[i]);
      kept.instance_ids.push_back(pc.instance_ids[i]);
      kept.class_ids.push_back(pc.class_ids[i]);
    }
    out.point_cloud = std::move(kept);
  };

  switch (patch.op) {
    case MapPatch::Op::remove: {
      drop_points(patch.target);
      out.instances.erase(out.instances.begin() + static_cast<std::ptrdiff_t>(slot));
      if (out.instances.empty() &&
          std::find(out.missing_layers.begin(), out.missing_layers.end(), "instance") ==
              out.missing_layers.end()) {
        out.missing_layers.push_back("point_cloud");
        out.missing_layers.push_back("instance");
      }
      break;
    }
    case MapPatch::Op::replace_caption: {
      if (patch.caption.empty()) throw InvalidArgument("apply_patch: empty caption");
      Embedding e;
      if (patch.embedding) {
        e = *patch.embedding;
      } else if (graph.embedder == "hash") {
        e = synthetic::hash_embedding(patch.caption, graph.embedding_dim);
      } else {
        throw InvalidArgument("apply_patch: caption replacement needs an embedding (map embedder '" +
                              graph.embedder + "' is not available locally)");
      }
      if (e.size() != graph.embedding_dim) {
        throw InvalidArgument("apply_patch: embedding has wrong dimension");
      }
      if (!(e.norm() > 0.0)) throw InvalidArgument("apply_patch: zero embedding");
      Instance& inst = out.instances[slot];
      inst.caption = patch.caption;
      inst.embedding = e.normalized().cast<float>();
      if (!out.catalog.empty()) {
        inst.class_id = hierarchy::classify_embedding(inst.embedding.cast<double>(), out.catalog);
        auto& pc = out.point_cloud;
        for (std::size_t i = 0; i < pc.points.size(); ++i) {
          if (pc.instance_ids[i] == inst.id) pc.class_ids[i] = inst.class_id;
        }
      }
      break;
    }
    case MapPatch::Op::replace_points: {
      if (patch.points.empty()) throw InvalidArgument("apply_patch: replacement point set is empty");
      drop_points(patch.target);
      Instance& inst = out.instances[slot];
      inst.aabb = geom::AxisAlignedBox::from_points(patch.points);
      Vec3 sum = Vec3::Zero();
      for (const Vec3& p : patch.points) sum += p;
      inst.centroid = sum / static_cast<double>(patch.points.size());
      for (const Vec3& p : geom::voxel_downsample(patch.points, out.config.voxel)) {
        out.point_cloud.points.push_back(p.cast<float>());
        out.point_cloud.instance_ids.push_back(inst.id);
        out.point_cloud.class_ids.push_back(inst.class_id);
      }
      break;
    }
  }
  hierarchy::relink(out);
  return out;
}

std::string retrieval_json(const RetrievalResult& result) {
  json hits = json::array();
  for (std::size_t r = 0; r < result.hits.size(); ++r) {
    const RetrievalHit& h = result.hits[r];
    hits.push_back({{"rank", r + 1}, {"id", h.id}, {"score", h.score}, {"caption", h.caption}});
  }
  return json{{"k", result.k}, {"results", hits}}.dump(2);
}

std::string locate_json(const HierarchicalGraph& graph, std::span<const LocateHit> hits) {
  json out = json::array();
  for (const LocateHit& h : hits) {
    const Segment* s = graph.find_segment(h.segment);
    out.push_back({{"segment", h.segment},
                   {"kind", hierarchy::to_string(h.kind)},
                   {"score", h.score},
                   {"centroid", s ? json::array({s->centroid.x(), s->centroid.y()}) : json()}});
  }
  return json{{"results", out}}.dump(2);
}

std::string plan_json(const PlanResult& result) {
  if (!result.found) return json{{"found", false}, {"error", "no path"}}.dump(2);
  return json{{"found", true}, {"nodes", result.nodes}, {"length", result.length}}.dump(2);
}

std::string instances_json(const HierarchicalGraph& graph) {
  json instances = json::array();
  for (const Instance& inst : graph.instances) {
    json entry = {{"id", inst.id},
                  {"caption", inst.caption},
                  {"centroid", {inst.centroid.x(), inst.centroid.y(), inst.centroid.z()}},
                  {"aabb_min", {inst.aabb.min.x(), inst.aabb.min.y(), inst.aabb.min.z()}},
                  {"aabb_max", {inst.aabb.max.x(), inst.aabb.max.y(), inst.aabb.max.z()}},
                  {"class_id", inst.class_id}};
    if (inst.class_id >= 0 && static_cast<std::size_t>(inst.class_id) < graph.catalog.size()) {
      entry["class"] = graph.catalog.names[static_cast<std::size_t>(inst.class_id)];
    }
    const auto link = graph.instance_segment.find(inst.id);
    if (link != graph.instance_segment.end()) entry["segment"] = link->second;
    instances.push_back(entry);
  }
  json edges = json::array();
  for (const auto& e : graph.instance_edges) {
    edges.push_back({{"a", e.a}, {"b", e.b}, {"relation", e.relation}});
  }
  return json{{"instances", instances}, {"edges", edges}}.dump(2);
}

}  // namespace opengraph::query
