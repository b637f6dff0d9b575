#pragma once

#include "opengraph/types.hpp"

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace opengraph::query {
struct LabeledCloud;
}

namespace opengraph::eval {

/// Label of a point without a class (missing ground truth or no prediction).
inline constexpr std::int32_t kUnlabeled = -1;

/// counts[g][p]: points with ground truth g predicted as p.
struct ConfusionMatrix {
  std::vector<std::string> classes;
  std::vector<std::vector<std::size_t>> counts;
  /// Ground-truth class c predicted as unlabeled.
  std::vector<std::size_t> missed;
  /// Unlabeled ground truth predicted as class c.
  std::vector<std::size_t> spurious;

  std::size_t tp(std::size_t c) const;
  std::size_t fp(std::size_t c, bool count_unlabeled_gt = true) const;
  std::size_t fn(std::size_t c) const;
};

ConfusionMatrix confusion_matrix(std::span<const std::int32_t> gt, std::span<const std::int32_t> pred,
                                 std::vector<std::string> classes);

struct ClassScore {
  std::string name;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double iou = 0.0;
  double f1 = 0.0;
  /// TP + FN > 0.
  bool has_support = false;
};

struct MetricsOptions {
  /// Predictions on unlabeled ground truth are ignored instead of counted as FP.
  bool ignore_unlabeled_gt = false;
  /// Optional column subset for the second average.
  std::vector<std::string> report_classes;
};

struct SegmentationReport {
  /// Classes with any TP, FP or FN, in class-list order.
  std::vector<ClassScore> classes;
  /// Mean IoU over classes with ground-truth support.
  double mean_iou = 0.0;
  /// Mean IoU over `report_classes` with support; equals mean_iou when unset.
  double subset_mean_iou = 0.0;
  /// 2ΣTP / (2ΣTP + ΣFP + ΣFN).
  double micro_f1 = 0.0;
  /// Mean per-class F1 over classes with support.
  double macro_f1 = 0.0;
  double subset_macro_f1 = 0.0;
  std::size_t points = 0;
};

/// Per-class IoU = TP / (TP + FP + FN) from point-aligned labels.
/// Throws InvalidArgument on length mismatch or out-of-range labels.
SegmentationReport segmentation_metrics(std::span<const std::int32_t> gt,
                                        std::span<const std::int32_t> pred,
                                        const std::vector<std::string>& classes,
                                        const MetricsOptions& options = {});

/// Fraction of queries whose top-k ids hit the relevant set. Empty relevant
/// sets count as misses; no queries gives 0.
double recall_at_k(const std::vector<std::vector<std::int64_t>>& rankings,
                   const std::vector<std::set<std::int64_t>>& relevant, std::size_t k);

/// Label of the nearest prediction within `radius` for every ground-truth
/// point (lowest index on ties), kUnlabeled when none is in range.
std::vector<std::int32_t> point_alignment(std::span<const Vec3> gt_points,
                                          std::span<const Vec3> pred_points,
                                          std::span<const std::int32_t> pred_labels, double radius);

struct AlignedLabels {
  std::vector<std::string> classes;
  std::vector<std::int32_t> gt;
  std::vector<std::int32_t> pred;
};

/// Aligns two labeled clouds and maps both onto the ground-truth class list
/// (prediction-only classes are appended by name).
AlignedLabels align_clouds(const query::LabeledCloud& gt, const query::LabeledCloud& pred,
                           double radius);

std::string report_json(const SegmentationReport& report);
/// Fixed-width table with one column per class and IoU / F1 rows.
std::string report_table(const SegmentationReport& report);

}  // namespace opengraph::eval
