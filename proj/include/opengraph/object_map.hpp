#pragma once

#include "opengraph/geom.hpp"
#include "opengraph/projection.hpp"
#include "opengraph/text.hpp"
#include "opengraph/types.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace opengraph::mapping {

using projection::ObjectObservation;

/// A fused instance of the object-centric map.
struct MapObject {
  std::int64_t id = 0;
  Points3 points;
  std::string caption;
  /// Unit-length direction of embedding_mean.
  Embedding embedding;
  /// Running mean of the (unit) observation embeddings.
  Embedding embedding_mean;
  std::int64_t observation_count = 0;
  geom::AxisAlignedBox aabb;
  Vec3 centroid = Vec3::Zero();

  static MapObject from_observation(std::int64_t id, const ObjectObservation& obs);

  /// Recomputes the cached box and centroid from `points`.
  void refresh_geometry();
};

struct SimilarityWeights {
  double geometry = 0.4;
  double caption = 0.2;
  double feature = 0.4;
  /// Association threshold δ_sim; a match needs φ >= threshold.
  double threshold = 0.6;

  void validate() const;
};

struct SimilarityComponents {
  double geometry = 0.0;
  double caption = 0.0;
  double feature = 0.0;

  double combined(const SimilarityWeights& w) const {
    return w.geometry * geometry + w.caption * caption + w.feature * feature;
  }
};

/// Smoothed TF-IDF cosine of two captions over `corpus`.
double caption_similarity(std::string_view a, std::string_view b, const text::CaptionCorpus& corpus);

SimilarityComponents similarity_components(const ObjectObservation& obs,
                                           const geom::AxisAlignedBox& obs_box,
                                           const MapObject& object,
                                           const text::CaptionCorpus& corpus);

/// φ = w_geo·IoU + w_cap·caption + w_fea·max(0, cos(f_o, f_m)).
double overall_similarity(const ObjectObservation& obs, const MapObject& object,
                          const SimilarityWeights& weights, const text::CaptionCorpus& corpus);

/// (new caption, existing caption) -> merged caption.
using CaptionMerger = std::function<std::string(std::string_view, std::string_view)>;

/// Keeps the longer caption (equal length: the lexicographically smaller) and
/// appends the other after "; " when their token-set Jaccard is below 0.5.
std::string merge_captions(std::string_view fresh, std::string_view existing);

/// Fuses an observation into an object: point union, running-mean embedding,
/// n+1, merged caption, refreshed geometry.
MapObject fuse(const ObjectObservation& obs, const MapObject& object, const CaptionMerger& merger);

struct AssociationConfig {
  SimilarityWeights weights;
  /// Only objects whose centroid lies within this distance of the
  /// observation centroid are scored. Infinity disables gating.
  double gating_radius = 30.0;
  CaptionMerger merger = merge_captions;

  void validate() const;
};

enum class AssociationOutcome { created, fused };

struct AssociationRecord {
  AssociationOutcome outcome = AssociationOutcome::created;
  std::int64_t object_id = 0;
  double score = 0.0;
};

/// Scores an observation against a candidate map object.
using SimilarityScorer =
    std::function<double(std::size_t obs_index, const ObjectObservation&, const MapObject&)>;

/// The incrementally built object-centric map.
class ObjectMap {
 public:
  explicit ObjectMap(AssociationConfig config = {});

  const std::vector<MapObject>& objects() const { return objects_; }
  const AssociationConfig& config() const { return config_; }
  std::size_t size() const { return objects_.size(); }
  const MapObject* find(std::int64_t id) const;

  /// Greedy association of one frame, processed in observation order. Each
  /// observation is matched to the arg-max φ candidate (lowest id on ties)
  /// and fused when φ >= threshold, otherwise it starts a new object.
  std::vector<AssociationRecord> integrate(std::span<const ObjectObservation> frame);

  /// Same rule with a caller-supplied scorer in place of overall_similarity.
  std::vector<AssociationRecord> integrate(std::span<const ObjectObservation> frame,
                                           const SimilarityScorer& scorer);

 private:
  using Cell = std::array<std::int64_t, 3>;

  Cell cell_of(const Vec3& p) const;
  std::vector<std::size_t> candidates(const Vec3& centroid) const;
  void index_insert(std::size_t slot);
  void index_erase(std::size_t slot);

  AssociationConfig config_;
  std::vector<MapObject> objects_;
  std::int64_t next_id_ = 0;
  std::map<Cell, std::vector<std::size_t>> grid_;
};

/// Free-function form; returns the updated map.
ObjectMap& associate_and_integrate(std::span<const ObjectObservation> frame, ObjectMap& map);

}  // namespace opengraph::mapping
