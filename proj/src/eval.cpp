#include "opengraph/eval.hpp"

#include "opengraph/geom.hpp"
#include "opengraph/query.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

namespace opengraph::eval {

std::size_t ConfusionMatrix::tp(std::size_t c) const { return counts[c][c]; }

std::size_t ConfusionMatrix::fp(std::size_t c, bool count_unlabeled_gt) const {
  std::size_t n = count_unlabeled_gt ? spurious[c] : 0;
  for (std::size_t g = 0; g < counts.size(); ++g) {
    if (g != c) n += counts[g][c];
  }
  return n;
}

std::size_t ConfusionMatrix::fn(std::size_t c) const {
  std::size_t n = missed[c];
  for (std::size_t p = 0; p < counts.size(); ++p) {
    if (p != c) n += counts[c][p];
  }
  return n;
}

ConfusionMatrix confusion_matrix(std::span<const std::int32_t> gt, std::span<const std::int32_t> pred,
                                 std::vector<std::string> classes) {
  if (gt.size() != pred.size()) {
    throw InvalidArgument("segmentation metrics: " + std::to_string(gt.size()) +
                          " ground-truth labels vs " + std::to_string(pred.size()) + " predictions");
  }
  const auto n = static_cast<std::int32_t>(classes.size());
  ConfusionMatrix m;
  m.counts.assign(classes.size(), std::vector<std::size_t>(classes.size(), 0));
  m.missed.assign(classes.size(), 0);
  m.spurious.assign(classes.size(), 0);
  m.classes = std::move(classes);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const std::int32_t g = gt[i];
    const std::int32_t p = pred[i];
    if (g < kUnlabeled || g >= n || p < kUnlabeled || p >= n) {
      throw InvalidArgument("segmentation metrics: label out of range at point " + std::to_string(i));
    }
    if (g == kUnlabeled && p == kUnlabeled) continue;
    if (g == kUnlabeled) {
      ++m.spurious[static_cast<std::size_t>(p)];
    } else if (p == kUnlabeled) {
      ++m.missed[static_cast<std::size_t>(g)];
    } else {
      ++m.counts[static_cast<std::size_t>(g)][static_cast<std::size_t>(p)];
    }
  }
  return m;
}

SegmentationReport segmentation_metrics(std::span<const std::int32_t> gt,
                                        std::span<const std::int32_t> pred,
                                        const std::vector<std::string>& classes,
                                        const MetricsOptions& options) {
  const ConfusionMatrix m = confusion_matrix(gt, pred, classes);
  SegmentationReport r;
  r.points = gt.size();
  std::size_t sum_tp = 0, sum_fp = 0, sum_fn = 0;
  double iou_sum = 0.0, f1_sum = 0.0, sub_iou = 0.0, sub_f1 = 0.0;
  std::size_t supported = 0, sub_supported = 0;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    ClassScore s;
    s.name = classes[c];
    s.tp = m.tp(c);
    s.fp = m.fp(c, !options.ignore_unlabeled_gt);
    s.fn = m.fn(c);
    if (s.tp + s.fp + s.fn == 0) continue;
    s.iou = static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fp + s.fn);
    s.f1 = 2.0 * static_cast<double>(s.tp) / static_cast<double>(2 * s.tp + s.fp + s.fn);
    s.has_support = s.tp + s.fn > 0;
    sum_tp += s.tp;
    sum_fp += s.fp;
    sum_fn += s.fn;
    if (s.has_support) {
      iou_sum += s.iou;
      f1_sum += s.f1;
      ++supported;
      const auto& sub = options.report_classes;
      if (sub.empty() || std::find(sub.begin(), sub.end(), s.name) != sub.end()) {
        sub_iou += s.iou;
        sub_f1 += s.f1;
        ++sub_supported;
      }
    }
    r.classes.push_back(std::move(s));
  }
  if (supported > 0) {
    r.mean_iou = iou_sum / static_cast<double>(supported);
    r.macro_f1 = f1_sum / static_cast<double>(supported);
  }
  if (sub_supported > 0) {
    r.subset_mean_iou = sub_iou / static_cast<double>(sub_supported);
    r.subset_macro_f1 = sub_f1 / static_cast<double>(sub_supported);
  }
  const std::size_t denom = 2 * sum_tp + sum_fp + sum_fn;
  if (denom > 0) r.micro_f1 = 2.0 * static_cast<double>(sum_tp) / static_cast<double>(denom);
  return r;
}

double recall_at_k(const std::vector<std::vector<std::int64_t>>& rankings,
                   const std::vector<std::set<std::int64_t>>& relevant, std::size_t k) {
  if (k < 1) throw InvalidArgument("recall_at_k: k must be >= 1");
  if (rankings.size() != relevant.size()) {
    throw InvalidArgument("recall_at_k: rankings and relevant sets differ in length");
  }
  if (rankings.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t q = 0; q < rankings.size(); ++q) {
    const std::size_t top = std::min(k, rankings[q].size());
    for (std::size_t r = 0; r < top; ++r) {
      if (relevant[q].count(rankings[q][r])) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(rankings.size());
}

std::vector<std::int32_t> point_alignment(std::span<const Vec3> gt_points,
                                          std::span<const Vec3> pred_points,
                                          std::span<const std::int32_t> pred_labels, double radius) {
  if (!(radius > 0.0)) throw InvalidArgument("point_alignment: radius must be positive");
  if (pred_labels.size() != pred_points.size()) {
    throw InvalidArgument("point_alignment: one label per predicted point required");
  }
  std::vector<std::int32_t> out(gt_points.size(), kUnlabeled);
  if (pred_points.empty()) return out;
  const geom::GridIndex<3> index(pred_points, radius);
  for (std::size_t i = 0; i < gt_points.size(); ++i) {
    if (const auto j = index.nearest(gt_points[i], radius)) out[i] = pred_labels[*j];
  }
  return out;
}

AlignedLabels align_clouds(const query::LabeledCloud& gt, const query::LabeledCloud& pred,
                           double radius) {
  AlignedLabels out;
  out.classes = gt.class_names;
  std::map<std::string, std::int32_t> index;
  for (std::size_t c = 0; c < out.classes.size(); ++c) index[out.classes[c]] = static_cast<std::int32_t>(c);
  std::vector<std::int32_t> pred_map(pred.class_names.size());
  for (std::size_t c = 0; c < pred.class_names.size(); ++c) {
    const auto [it, fresh] = index.emplace(pred.class_names[c], static_cast<std::int32_t>(out.classes.size()));
    if (fresh) out.classes.push_back(pred.class_names[c]);
    pred_map[c] = it->second;
  }

  auto to_label = [](std::uint16_t raw, std::size_t n, const std::vector<std::int32_t>* remap) {
    if (raw == query::kUnlabeled) return kUnlabeled;
    if (raw >= n) throw DataError("labeled cloud: class id " + std::to_string(raw) + " out of range");
    return remap ? (*remap)[raw] : static_cast<std::int32_t>(raw);
  };

  Points3 gt_pts, pred_pts;
  std::vector<std::int32_t> pred_labels;
  for (std::size_t i = 0; i < gt.points.size(); ++i) {
    gt_pts.push_back(gt.points[i].cast<double>());
    out.gt.push_back(to_label(gt.labels[i], gt.class_names.size(), nullptr));
  }
  for (std::size_t i = 0; i < pred.points.size(); ++i) {
    pred_pts.push_back(pred.points[i].cast<double>());
    pred_labels.push_back(to_label(pred.labels[i], pred.class_names.size(), &pred_map));
  }
  out.pred = point_alignment(gt_pts, pred_pts, pred_labels, radius);
  return out;
}

std::string report_json(const SegmentationReport& report) {
  nlohmann::json classes = nlohmann::json::array();
  for (const ClassScore& s : report.classes) {
    classes.push_back({{"class", s.name},
                       {"tp", s.tp},
                       {"fp", s.fp},
                       {"fn", s.fn},
                       {"iou", s.iou},
                       {"f1", s.f1},
                       {"has_support", s.has_support}});
  }
  return nlohmann::json{{"points", report.points},
                        {"classes", classes},
                        {"mean_iou", report.mean_iou},
                        {"subset_mean_iou", report.subset_mean_iou},
                        {"micro_f1", report.micro_f1},
                        {"macro_f1", report.macro_f1},
                        {"subset_macro_f1", report.subset_macro_f1}}
      .dump(2);
}

std::string report_table(const SegmentationReport& report) {
  std::ostringstream out;
  char cell[64];
  auto column = [&](const std::string& text) {
    std::snprintf(cell, sizeof cell, " %12.12s", text.c_str());
    out << cell;
  };
  auto number = [&](double v) {
    std::snprintf(cell, sizeof cell, " %12.4f", v);
    out << cell;
  };
  column("metric");
  for (const ClassScore& s : report.classes) column(s.name);
  column("average");
  out << '\n';
  column("IoU");
  for (const ClassScore& s : report.classes) number(s.iou);
  number(report.mean_iou);
  out << '\n';
  column("F1");
  for (const ClassScore& s : report.classes) number(s.f1);
  number(report.micro_f1);
  out << '\n';
  std::snprintf(cell, sizeof cell, "%.4f", report.macro_f1);
  out << "macro F1 " << cell;
  std::snprintf(cell, sizeof cell, "%.4f", report.subset_mean_iou);
  out << ", subset mean IoU " << cell << '\n';
  return out.str();
}

}  // namespace opengraph::eval
