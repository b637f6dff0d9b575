// opengraph: build, query, patch and evaluate hierarchical maps.

#include "opengraph/config.hpp"
#include "opengraph/eval.hpp"
#include "opengraph/hierarchy.hpp"
#include "opengraph/pipeline.hpp"
#include "opengraph/query.hpp"
#include "opengraph/synthetic.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace opengraph;

namespace {

constexpr int kUsageError = 1;
constexpr int kDataError = 2;

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  out << text;
  if (text.empty() || text.back() != '\n') out << '\n';
  if (!out) throw DataError("cannot write " + path.string());
}

/// A JSON array of numbers, or whitespace / comma separated numbers.
Embedding read_embedding(const fs::path& path) {
  const std::string text = read_text(path);
  std::vector<double> values;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') {
    try {
      values = nlohmann::json::parse(text).get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ": " + e.what());
    }
  } else {
    std::string cleaned = text;
    std::replace(cleaned.begin(), cleaned.end(), ',', ' ');
    std::istringstream in(cleaned);
    double v = 0.0;
    while (in >> v) values.push_back(v);
    if (!in.eof()) throw DataError(path.string() + ": not a list of numbers");
  }
  if (values.empty()) throw DataError(path.string() + ": empty embedding");
  return Eigen::Map<const Embedding>(values.data(), static_cast<Eigen::Index>(values.size()));
}

/// {"classes": [name | {"name", "embedding"?, "color"?}, ...]} or a manifest.
hierarchy::ClassCatalog read_catalog(const fs::path& path, const hierarchy::HierarchicalGraph& graph) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  const char* key = doc.contains("classes") ? "classes" : "class_list";
  if (!doc.contains(key)) throw DataError(path.string() + ": no 'classes' list");
  std::vector<ingest::ClassEntry> entries;
  for (const auto& c : doc.at(key)) {
    ingest::ClassEntry e;
    if (c.is_string()) {
      e.name = c.get<std::string>();
    } else {
      e.name = c.at("name").get<std::string>();
      if (c.contains("embedding")) {
        const auto v = c.at("embedding").get<std::vector<double>>();
        e.embedding = Eigen::Map<const Embedding>(v.data(), static_cast<Eigen::Index>(v.size()));
      }
      if (c.contains("color")) e.color = c.at("color").get<std::array<std::uint8_t, 3>>();
    }
    entries.push_back(std::move(e));
  }
  std::function<Embedding(const std::string&)> embed;
  if (graph.embedder == "hash") {
    embed = [&graph](const std::string& name) { return synthetic::hash_embedding(name, graph.embedding_dim); };
  }
  return hierarchy::ClassCatalog::from_entries(entries, graph.embedding_dim, embed);
}

std::int32_t class_id_of(const hierarchy::HierarchicalGraph& graph, const std::string& name) {
  const auto id = graph.catalog.find(name);
  if (!id) throw InvalidArgument("unknown class '" + name + "'");
  return *id;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical open-vocabulary map builder"};
  app.require_subcommand(1);
  std::string config_file;
  std::vector<std::string> overrides;
  app.add_option("--config", config_file, "Run configuration (key = value lines)")->check(CLI::ExistingFile);
  app.add_option("--set", overrides, "Override one configuration key (key=value)");

  // build
  auto* build = app.add_subcommand("build", "Build a map container from a sequence directory");
  std::string data_dir, out_path;
  build->add_option("data_dir", data_dir)->required();
  build->add_option("-o,--output", out_path, "Map container directory")->required();

  // lane
  auto* lane = app.add_subcommand("lane", "Extract the lane graph of a sequence as JSON");
  lane->add_option("data_dir", data_dir)->required();
  lane->add_option("-o,--output", out_path)->required();

  // retrieve
  auto* retrieve = app.add_subcommand("retrieve", "Rank instances against a query embedding");
  std::string map_path, query_file, query_text, candidates_file;
  std::size_t k = 3;
  retrieve->add_option("map", map_path)->required();
  auto* qe = retrieve->add_option("--query-emb", query_file, "Embedding file (JSON array or numbers)");
  auto* qt = retrieve->add_option("--text", query_text, "Query text (maps built with the hash embedder)");
  qe->excludes(qt);
  retrieve->add_option("-k", k)->check(CLI::PositiveNumber);
  retrieve->add_option("--export-candidates", candidates_file, "Write candidate captions for re-ranking");

  // segment
  auto* segment = app.add_subcommand("segment", "Label the point cloud layer by class");
  std::string classes_file;
  segment->add_option("map", map_path)->required();
  segment->add_option("--classes", classes_file, "Class list JSON (defaults to the map's catalog)");
  segment->add_option("-o,--output", out_path)->required();

  // locate
  auto* locate = app.add_subcommand("locate", "Find segments by kind and nearby objects");
  std::string kind;
  std::vector<std::string> near, constraints;
  locate->add_option("map", map_path)->required();
  locate->add_option("--kind", kind, "intersection | t_intersection | l_intersection | straight");
  locate->add_option("--near", near, "Class that must be 'near' a linked instance");
  locate->add_option("--constraint", constraints, "relation:class, e.g. 'adjacent to:car'");

  // plan
  auto* plan = app.add_subcommand("plan", "Shortest lane-graph path between segments or nodes");
  std::string from, to;
  plan->add_option("map", map_path)->required();
  plan->add_option("--from", from, "S<segment id> or N<lane node id>")->required();
  plan->add_option("--to", to)->required();

  // patch
  auto* patch = app.add_subcommand("patch", "Apply an edit and write a new map version");
  std::int64_t remove_id = -1, caption_id = -1, points_id = -1;
  std::string new_caption, caption_emb, points_file;
  patch->add_option("map", map_path)->required();
  auto* rm = patch->add_option("--remove", remove_id, "Instance id to delete");
  auto* rc = patch->add_option("--caption-of", caption_id, "Instance id whose caption is replaced");
  patch->add_option("--caption", new_caption)->needs(rc);
  patch->add_option("--caption-emb", caption_emb, "Embedding of the new caption")->needs(rc);
  auto* rp = patch->add_option("--points-of", points_id, "Instance id whose points are replaced");
  patch->add_option("--points", points_file, "ASCII x y z file")->needs(rp);
  rm->excludes(rc)->excludes(rp);
  rc->excludes(rp);
  patch->add_option("-o,--output", out_path)->required();

  // instances
  auto* instances = app.add_subcommand("instances", "Export captions, boxes and relations as JSON");
  instances->add_option("map", map_path)->required();
  instances->add_option("-o,--output", out_path);

  // eval
  auto* evaluate = app.add_subcommand("eval", "Per-class IoU / F1 of a labeled cloud against ground truth");
  std::string gt_file, pred_file, json_out;
  std::vector<std::string> report_classes;
  evaluate->add_option("--gt", gt_file)->required()->check(CLI::ExistingFile);
  evaluate->add_option("--pred", pred_file)->required()->check(CLI::ExistingFile);
  evaluate->add_option("--json", json_out, "Also write the metrics as JSON");
  evaluate->add_option("--report-classes", report_classes, "Classes for the subset average")->delimiter(',');

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic sequence with ground truth");
  std::string spec_file;
  synth->add_option("spec", spec_file)->required()->check(CLI::ExistingFile);
  synth->add_option("-o,--output", out_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    RunConfig config = config_file.empty() ? RunConfig{} : RunConfig::load(config_file);
    for (const std::string& o : overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos) throw InvalidArgument("--set expects key=value, got '" + o + "'");
      config.set(o.substr(0, eq), o.substr(eq + 1));
    }
    config.validate();

    if (*build) {
      BuildReport report;
      const auto graph = build_map(data_dir, config, &report);
      hierarchy::save(graph, out_path);
      std::cout << "frames " << report.frames << ", skipped " << report.skipped_frames << ", objects "
                << graph.instances.size() << ", segments " << graph.segments.size() << "\n";
      for (const auto& layer : graph.missing_layers) std::cout << "missing layer: " << layer << "\n";
    } else if (*lane) {
      write_text(out_path, lane_graph_json(build_lane_graph_from_dir(data_dir, config)));
    } else if (*retrieve) {
      const auto graph = hierarchy::load(map_path);
      Embedding query;
      if (!query_file.empty()) {
        query = read_embedding(query_file);
      } else if (!query_text.empty()) {
        if (graph.embedder != "hash") {
          throw InvalidArgument("--text needs a map built with the hash embedder; use --query-emb");
        }
        query = synthetic::hash_embedding(query_text, graph.embedding_dim);
      } else {
        throw InvalidArgument("retrieve needs --query-emb or --text");
      }
      const auto result = query::retrieve(graph, query, k);
      std::cout << query::retrieval_json(result) << "\n";
      if (!candidates_file.empty()) write_text(candidates_file, query::retrieval_json(result));
    } else if (*segment) {
      const auto graph = hierarchy::load(map_path);
      const auto catalog = classes_file.empty() ? graph.catalog : read_catalog(classes_file, graph);
      const auto result = query::semantic_segmentation(graph, catalog);
      query::write_labeled_cloud(result.cloud, out_path);
      nlohmann::json counts;
      for (std::size_t c = 0; c < catalog.size(); ++c) counts[catalog.names[c]] = result.class_counts[c];
      std::cout << nlohmann::json{{"points", result.cloud.points.size()},
                                  {"unlabeled", result.unlabeled},
                                  {"class_counts", counts}}
                       .dump(2)
                << "\n";
    } else if (*locate) {
      const auto graph = hierarchy::load(map_path);
      std::optional<hierarchy::SegmentKind> filter;
      if (!kind.empty()) {
        try {
          filter = hierarchy::segment_kind_from_string(kind);
        } catch (const DataError& e) {
          throw InvalidArgument(e.what());
        }
      }
      std::vector<query::RelationConstraint> list;
      for (const auto& name : near) list.push_back({"near", class_id_of(graph, name)});
      for (const auto& c : constraints) {
        const auto colon = c.rfind(':');
        if (colon == std::string::npos) throw InvalidArgument("--constraint expects relation:class");
        list.push_back({c.substr(0, colon), class_id_of(graph, c.substr(colon + 1))});
      }
      const auto hits = query::locate(graph, filter, list);
      std::cout << query::locate_json(graph, hits) << "\n";
    } else if (*plan) {
      const auto graph = hierarchy::load(map_path);
      const auto result = query::plan_path(graph, from, to);
      std::cout << query::plan_json(result) << "\n";
      if (!result.found) {
        std::cerr << "no path\n";
        return kDataError;
      }
    } else if (*patch) {
      const auto graph = hierarchy::load(map_path);
      query::MapPatch p;
      if (*rm) {
        p.op = query::MapPatch::Op::remove;
        p.target = remove_id;
      } else if (*rc) {
        p.op = query::MapPatch::Op::replace_caption;
        p.target = caption_id;
        p.caption = new_caption;
        if (!caption_emb.empty()) p.embedding = read_embedding(caption_emb);
      } else if (*rp) {
        p.op = query::MapPatch::Op::replace_points;
        p.target = points_id;
        p.points = ingest::load_cloud(points_file).points;
      } else {
        throw InvalidArgument("patch needs --remove, --caption-of or --points-of");
      }
      const auto patched = query::apply_patch(graph, p);
      const auto issues = hierarchy::validate(patched);
      for (const auto& issue : issues) std::cerr << "invariant violated: " << issue << "\n";
      if (!issues.empty()) return kDataError;
      hierarchy::save(patched, out_path);
      std::cout << "instances " << patched.instances.size() << ", edges " << patched.instance_edges.size()
                << "\n";
    } else if (*instances) {
      const auto graph = hierarchy::load(map_path);
      const std::string text = query::instances_json(graph);
      if (out_path.empty()) {
        std::cout << text << "\n";
      } else {
        write_text(out_path, text);
      }
    } else if (*evaluate) {
      const auto gt = query::read_labeled_cloud(gt_file);
      const auto pred = query::read_labeled_cloud(pred_file);
      const auto aligned = eval::align_clouds(gt, pred, config.eval_radius);
      eval::MetricsOptions options;
      options.ignore_unlabeled_gt = config.eval_ignore_unlabeled;
      options.report_classes = report_classes;
      const auto report = eval::segmentation_metrics(aligned.gt, aligned.pred, aligned.classes, options);
      std::cout << eval::report_table(report);
      if (!json_out.empty()) write_text(json_out, eval::report_json(report));
    } else if (*synth) {
      const auto spec = synthetic::load_scene_spec(spec_file);
      const auto gt = synthetic::generate_scene(spec, out_path);
      std::size_t unseen = 0;
      for (const auto& o : gt.objects) unseen += o.observed_frames.empty() ? 1 : 0;
      std::cout << "objects " << gt.objects.size() << ", frames " << gt.frame_indices.size()
                << ", never detected " << unseen << "\n";
    }
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  }
  return 0;
}
