#include "opengraph/eval.hpp"
#include "opengraph/hierarchy.hpp"
#include "opengraph/pipeline.hpp"
#include "opengraph/query.hpp"
#include "opengraph/synthetic.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace opengraph;
using hierarchy::HierarchicalGraph;

namespace {

RunConfig make_config(const std::map<std::string, std::string>& settings) {
  RunConfig cfg;
  for (const auto& [k, v] : settings) cfg.set(k, v);
  cfg.validate();
  return cfg;
}

py::dict instance_dict(const HierarchicalGraph& g, const hierarchy::Instance& inst) {
  py::dict d;
  d["id"] = inst.id;
  d["caption"] = inst.caption;
  d["centroid"] = inst.centroid;
  d["aabb_min"] = inst.aabb.min;
  d["aabb_max"] = inst.aabb.max;
  d["class_id"] = inst.class_id;
  d["class"] = inst.class_id >= 0 && static_cast<std::size_t>(inst.class_id) < g.catalog.size()
                   ? py::cast(g.catalog.names[static_cast<std::size_t>(inst.class_id)])
                   : py::none();
  d["observations"] = inst.observation_count;
  const auto link = g.instance_segment.find(inst.id);
  d["segment"] = link == g.instance_segment.end() ? py::none() : py::cast(link->second);
  return d;
}

}  // namespace

PYBIND11_MODULE(_opengraph, m) {
  m.doc() = "Hierarchical open-vocabulary map engine";

  static py::handle data_error = py::exception<DataError>(m, "DataError", PyExc_ValueError).release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const InvalidArgument& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const DataError& e) {
      py::set_error(data_error, e.what());
    }
  });

  m.def("hash_embedding", &synthetic::hash_embedding, py::arg("text"), py::arg("dim"));

  m.def(
      "generate_scene",
      [](const std::string& spec_json, const std::filesystem::path& out_dir) {
        const auto gt = synthetic::generate_scene(synthetic::parse_scene_spec(spec_json), out_dir);
        py::list objects;
        for (const auto& o : gt.objects) {
          py::dict d;
          d["id"] = o.id;
          d["class"] = o.class_name;
          d["caption"] = o.caption;
          d["center"] = o.center;
          d["embedding"] = o.embedding;
          d["observed_frames"] = o.observed_frames;
          objects.append(d);
        }
        py::dict out;
        out["classes"] = gt.classes;
        out["objects"] = objects;
        out["frame_indices"] = gt.frame_indices;
        return out;
      },
      py::arg("spec_json"), py::arg("out_dir"));

  py::class_<HierarchicalGraph>(m, "Map")
      .def_static("load", &hierarchy::load, py::arg("path"))
      .def("save", [](const HierarchicalGraph& g, const std::filesystem::path& p) { hierarchy::save(g, p); })
      .def_readonly("embedding_dim", &HierarchicalGraph::embedding_dim)
      .def_readonly("embedder", &HierarchicalGraph::embedder)
      .def_readonly("missing_layers", &HierarchicalGraph::missing_layers)
      .def_property_readonly("classes", [](const HierarchicalGraph& g) { return g.catalog.names; })
      .def_property_readonly("instances",
                             [](const HierarchicalGraph& g) {
                               py::list out;
                               for (const auto& inst : g.instances) out.append(instance_dict(g, inst));
                               return out;
                             })
      .def_property_readonly("edges",
                             [](const HierarchicalGraph& g) {
                               py::list out;
                               for (const auto& e : g.instance_edges) out.append(py::make_tuple(e.a, e.b, e.relation));
                               return out;
                             })
      .def_property_readonly("segments",
                             [](const HierarchicalGraph& g) {
                               py::list out;
                               for (const auto& s : g.segments) {
                                 py::dict d;
                                 d["id"] = s.id;
                                 d["kind"] = std::string(hierarchy::to_string(s.kind));
                                 d["centroid"] = s.centroid;
                                 out.append(d);
                               }
                               return out;
                             })
      .def("validate", &hierarchy::validate)
      .def(
          "retrieve",
          [](const HierarchicalGraph& g, const Embedding& q, std::size_t k) {
            py::list out;
            for (const auto& h : query::retrieve(g, q, k).hits) out.append(py::make_tuple(h.id, h.score, h.caption));
            return out;
          },
          py::arg("query"), py::arg("k") = 3)
      .def(
          "retrieve_text",
          [](const HierarchicalGraph& g, const std::string& text, std::size_t k) {
            if (g.embedder != "hash") throw InvalidArgument("retrieve_text needs a hash-embedder map");
            py::list out;
            for (const auto& h : query::retrieve(g, synthetic::hash_embedding(text, g.embedding_dim), k).hits) {
              out.append(py::make_tuple(h.id, h.score, h.caption));
            }
            return out;
          },
          py::arg("text"), py::arg("k") = 3)
      .def(
          "segment",
          [](const HierarchicalGraph& g) {
            const auto r = query::semantic_segmentation(g, g.catalog);
            const auto n = static_cast<py::ssize_t>(r.cloud.points.size());
            py::array_t<float> points({n, py::ssize_t{3}});
            py::array_t<std::int32_t> labels(n);
            auto pv = points.mutable_unchecked<2>();
            auto lv = labels.mutable_unchecked<1>();
            for (py::ssize_t i = 0; i < n; ++i) {
              const auto& p = r.cloud.points[static_cast<std::size_t>(i)];
              pv(i, 0) = p.x();
              pv(i, 1) = p.y();
              pv(i, 2) = p.z();
              const auto l = r.cloud.labels[static_cast<std::size_t>(i)];
              lv(i) = l == query::kUnlabeled ? -1 : l;
            }
            return py::make_tuple(points, labels);
          })
      .def(
          "locate",
          [](const HierarchicalGraph& g, std::optional<std::string> kind,
             const std::vector<std::pair<std::string, std::string>>& constraints) {
            std::optional<hierarchy::SegmentKind> filter;
            if (kind) filter = hierarchy::segment_kind_from_string(*kind);
            std::vector<query::RelationConstraint> list;
            for (const auto& [rel, cls] : constraints) {
              const auto id = g.catalog.find(cls);
              if (!id) throw InvalidArgument("unknown class '" + cls + "'");
              list.push_back({rel, *id});
            }
            py::list out;
            for (const auto& h : query::locate(g, filter, list)) out.append(py::make_tuple(h.segment, h.score));
            return out;
          },
          py::arg("kind") = py::none(), py::arg("constraints") = std::vector<std::pair<std::string, std::string>>{})
      .def(
          "plan",
          [](const HierarchicalGraph& g, const std::string& from, const std::string& to) -> py::object {
            const auto r = query::plan_path(g, from, to);
            if (!r.found) return py::none();
            return py::make_tuple(r.nodes, r.length);
          },
          py::arg("start"), py::arg("goal"))
      .def(
          "remove",
          [](const HierarchicalGraph& g, std::int64_t id) {
            query::MapPatch p;
            p.op = query::MapPatch::Op::remove;
            p.target = id;
            return query::apply_patch(g, p);
          },
          py::arg("id"))
      .def(
          "replace_caption",
          [](const HierarchicalGraph& g, std::int64_t id, const std::string& caption,
             std::optional<Embedding> embedding) {
            query::MapPatch p;
            p.op = query::MapPatch::Op::replace_caption;
            p.target = id;
            p.caption = caption;
            p.embedding = std::move(embedding);
            return query::apply_patch(g, p);
          },
          py::arg("id"), py::arg("caption"), py::arg("embedding") = py::none());

  m.def(
      "build_map",
      [](const std::filesystem::path& data_dir, const std::map<std::string, std::string>& settings) {
        py::gil_scoped_release release;
        return build_map(data_dir, make_config(settings));
      },
      py::arg("data_dir"), py::arg("settings") = std::map<std::string, std::string>{});

  m.def(
      "lane_graph",
      [](const std::filesystem::path& data_dir, const std::map<std::string, std::string>& settings) {
        const auto lg = build_lane_graph_from_dir(data_dir, make_config(settings));
        py::list nodes;
        for (std::size_t k = 0; k < lg.nodes.size(); ++k) {
          nodes.append(py::make_tuple(lg.nodes[k].position, std::string(lanes::to_string(lg.nodes[k].kind)),
                                      lg.degree(k)));
        }
        py::list edges;
        for (const auto& e : lg.edges) edges.append(py::make_tuple(e.a, e.b, e.length));
        return py::make_tuple(nodes, edges);
      },
      py::arg("data_dir"), py::arg("settings") = std::map<std::string, std::string>{});

  m.def(
      "segmentation_metrics",
      [](const std::vector<std::int32_t>& gt, const std::vector<std::int32_t>& pred,
         const std::vector<std::string>& classes) {
        const auto r = eval::segmentation_metrics(gt, pred, classes);
        py::dict per_class;
        for (const auto& c : r.classes) per_class[py::str(c.name)] = py::make_tuple(c.iou, c.f1);
        py::dict out;
        out["classes"] = per_class;
        out["mean_iou"] = r.mean_iou;
        out["micro_f1"] = r.micro_f1;
        out["macro_f1"] = r.macro_f1;
        return out;
      },
      py::arg("gt"), py::arg("pred"), py::arg("classes"));

  m.def("recall_at_k", &eval::recall_at_k, py::arg("rankings"), py::arg("relevant"), py::arg("k"));
}
