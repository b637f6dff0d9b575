#include "opengraph/object_map.hpp"

#include <algorithm>
#include <cmath>

namespace opengraph::mapping {

MapObject MapObject::from_observation(std::int64_t id, const ObjectObservation& obs) {
  if (obs.points.empty()) throw InvalidArgument("MapObject: observation has no points");
  MapObject m;
  m.id = id;
  m.points = obs.points;
  m.caption = obs.caption;
  m.embedding_mean = obs.embedding;
  m.embedding = obs.embedding.normalized();
  m.observation_count = 1;
  m.refresh_geometry();
  return m;
}

void MapObject::refresh_geometry() {
  aabb = geom::AxisAlignedBox::from_points(points);
  Vec3 sum = Vec3::Zero();
  for (const Vec3& p : points) sum += p;
  centroid = sum / static_cast<double>(points.size());
}

void SimilarityWeights::validate() const {
  if (geometry < 0.0 || caption < 0.0 || feature < 0.0) {
    throw InvalidArgument("similarity weights must be non-negative");
  }
  if (std::abs(geometry + caption + feature - 1.0) > 1e-9) {
    throw InvalidArgument("similarity weights must sum to 1");
  }
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw InvalidArgument("similarity threshold must lie in (0, 1)");
  }
}

double caption_similarity(std::string_view a, std::string_view b, const text::CaptionCorpus& corpus) {
  return text::tfidf_cosine(a, b, corpus);
}

SimilarityComponents similarity_components(const ObjectObservation& obs,
                                           const geom::AxisAlignedBox& obs_box,
                                           const MapObject& object,
                                           const text::CaptionCorpus& corpus) {
  SimilarityComponents c;
  c.geometry = geom::aabb_iou(obs_box, object.aabb);
  c.caption = caption_similarity(obs.caption, object.caption, corpus);
  c.feature = std::max(0.0, geom::cosine_similarity(obs.embedding, object.embedding));
  return c;
}

double overall_similarity(const ObjectObservation& obs, const MapObject& object,
                          const SimilarityWeights& weights, const text::CaptionCorpus& corpus) {
  const auto box = geom::AxisAlignedBox::from_points(obs.points);
  return similarity_components(obs, box, object, corpus).combined(weights);
}

std::string merge_captions(std::string_view fresh, std::string_view existing) {
  if (fresh == existing) return std::string(fresh);
  std::string_view first = fresh;
  std::string_view second = existing;
  if (second.size() > first.size() || (second.size() == first.size() && second < first)) {
    std::swap(first, second);
  }
  if (text::token_jaccard(first, second) < 0.5) {
    return std::string(first) + "; " + std::string(second);
  }
  return std::string(first);
}

MapObject fuse(const ObjectObservation& obs, const MapObject& object, const CaptionMerger& merger) {
  MapObject out = object;
  out.points.insert(out.points.end(), obs.points.begin(), obs.points.end());

  const double n = static_cast<double>(object.observation_count);
  out.embedding_mean = (obs.embedding + n * object.embedding_mean) / (n + 1.0);
  const double norm = out.embedding_mean.norm();
  // Exactly opposite observations cancel; keep the previous direction then.
  if (norm > 1e-12) out.embedding = out.embedding_mean / norm;

  out.observation_count = object.observation_count + 1;
  out.caption = merger ? merger(obs.caption, object.caption) : merge_captions(obs.caption, object.caption);
  out.refresh_geometry();
  return out;
}

void AssociationConfig::validate() const {
  weights.validate();
  if (!(gating_radius > 0.0)) throw InvalidArgument("gating radius must be positive");
}

// ---------------------------------------------------------------------------

ObjectMap::ObjectMap(AssociationConfig config) : config_(std::move(config)) {
  config_.validate();
  if (!config_.merger) config_.merger = merge_captions;
}

const MapObject* ObjectMap::find(std::int64_t id) const {
  const auto it = std::lower_bound(objects_.begin(), objects_.end(), id,
                                   [](const MapObject& o, std::int64_t v) { return o.id < v; });
  return it != objects_.end() && it->id == id ? &*it : nullptr;
}

ObjectMap::Cell ObjectMap::cell_of(const Vec3& p) const {
  Cell c{};
  for (int i = 0; i < 3; ++i) {
    c[i] = static_cast<std::int64_t>(std::floor(p[i] / config_.gating_radius));
  }
  return c;
}

void ObjectMap::index_insert(std::size_t slot) {
  if (std::isinf(config_.gating_radius)) return;
  grid_[cell_of(objects_[slot].centroid)].push_back(slot);
}

void ObjectMap::index_erase(std::size_t slot) {
  if (std::isinf(config_.gating_radius)) return;
  auto it = grid_.find(cell_of(objects_[slot].centroid));
  if (it == grid_.end()) return;
  auto& v = it->second;
  v.erase(std::remove(v.begin(), v.end(), slot), v.end());
  if (v.empty()) grid_.erase(it);
}

std::vector<std::size_t> ObjectMap::candidates(const Vec3& centroid) const {
  std::vector<std::size_t> out;
  if (std::isinf(config_.gating_radius)) {
    out.resize(objects_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = i;
    return out;
  }
  const double r2 = config_.gating_radius * config_.gating_radius;
  const Cell c = cell_of(centroid);
  for (std::int64_t dx = -1; dx <= 1; ++dx) {
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
      for (std::int64_t dz = -1; dz <= 1; ++dz) {
        const auto it = grid_.find({c[0] + dx, c[1] + dy, c[2] + dz});
        if (it == grid_.end()) continue;
        for (std::size_t slot : it->second) {
          if ((objects_[slot].centroid - centroid).squaredNorm() <= r2) out.push_back(slot);
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<AssociationRecord> ObjectMap::integrate(std::span<const ObjectObservation> frame) {
  std::vector<std::string> docs;
  docs.reserve(objects_.size() + frame.size());
  for (const MapObject& o : objects_) docs.push_back(o.caption);
  for (const ObjectObservation& o : frame) docs.push_back(o.caption);
  const text::CaptionCorpus corpus(docs);

  std::vector<geom::AxisAlignedBox> boxes;
  boxes.reserve(frame.size());
  for (const ObjectObservation& o : frame) boxes.push_back(geom::AxisAlignedBox::from_points(o.points));

  return integrate(frame, [&](std::size_t i, const ObjectObservation& obs, const MapObject& obj) {
    return similarity_components(obs, boxes[i], obj, corpus).combined(config_.weights);
  });
}

std::vector<AssociationRecord> ObjectMap::integrate(std::span<const ObjectObservation> frame,
                                                    const SimilarityScorer& scorer) {
  std::vector<AssociationRecord> records;
  records.reserve(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) {
    const ObjectObservation& obs = frame[i];
    if (obs.points.empty()) throw InvalidArgument("integrate: observation has no points");
    Vec3 centroid = Vec3::Zero();
    for (const Vec3& p : obs.points) centroid += p;
    centroid /= static_cast<double>(obs.points.size());

    std::optional<std::size_t> best;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t slot : candidates(centroid)) {
      const double s = scorer(i, obs, objects_[slot]);
      if (s > best_score) {
        best_score = s;
        best = slot;
      }
    }

    if (best && best_score >= config_.weights.threshold) {
      index_erase(*best);
      objects_[*best] = fuse(obs, objects_[*best], config_.merger);
      index_insert(*best);
      records.push_back({AssociationOutcome::fused, objects_[*best].id, best_score});
    } else {
      objects_.push_back(MapObject::from_observation(next_id_++, obs));
      index_insert(objects_.size() - 1);
      records.push_back({AssociationOutcome::created, objects_.back().id,
                         best ? best_score : 0.0});
    }
  }
  return records;
}

ObjectMap& associate_and_integrate(std::span<const ObjectObservation> frame, ObjectMap& map) {
  map.integrate(frame);
  return map;
}

}  // namespace opengraph::mapping
