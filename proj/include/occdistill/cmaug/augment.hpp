#ifndef OCCDISTILL_CMAUG_AUGMENT_HPP
#define OCCDISTILL_CMAUG_AUGMENT_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "occdistill/cmaug/database_builder.hpp"
#include "occdistill/cmaug/object_sample.hpp"
#include "occdistill/error.hpp"
#include "occdistill/geometry/box3d.hpp"
#include "occdistill/geometry/overlap.hpp"
#include "occdistill/rng.hpp"

namespace occdistill::cmaug {

struct AugConfig {
  std::map<std::string, std::size_t> samples_per_class{
      {"Car", 10}, {"Pedestrian", 5}, {"Cyclist", 5}};
  double oais_threshold = 0.5;
  double bev_iou_threshold = 0.0;
  double min_patch_w = 16, min_patch_h = 16;
  std::size_t min_points = 5;
  double pseudo_score_min = 0.3;
  bool remove_swallowed_points = true;
  std::uint64_t seed = 0;

  void validate() const {
    for (double t : {oais_threshold, bev_iou_threshold, pseudo_score_min}) {
      if (!(t >= 0 && t <= 1)) throw ConfigError("augmentation thresholds must lie in [0, 1]");
    }
    if (!(min_patch_w >= 0 && min_patch_h >= 0)) {
      throw ConfigError("min_patch_px must be non-negative");
    }
  }
};

/// Image-plane collision criterion.
enum class PvCriterion { kOais, kIou };

inline const char* criterion_name(PvCriterion c) { return c == PvCriterion::kOais ? "oais" : "iou"; }

inline PvCriterion parse_criterion(const std::string& s) {
  if (s == "oais") return PvCriterion::kOais;
  if (s == "iou") return PvCriterion::kIou;
  throw ConfigError("unknown criterion '" + s + "' (expected iou or oais)");
}

// ---------------------------------------------------------------------------
// Pseudo-labels

/// Keeps detections scoring at least `score_min`. The survivors only gate
/// pasting; they are not training labels.
inline std::vector<LabelRecord> ingest_pseudo_labels(std::span<const LabelRecord> predictions,
                                                     double score_min) {
  std::vector<LabelRecord> kept;
  for (const auto& r : predictions) {
    if (r.dont_care()) continue;
    if (r.score.value_or(0.0) >= score_min) kept.push_back(r);
  }
  return kept;
}

inline std::vector<LabelRecord> ingest_pseudo_label_file(const std::filesystem::path& path,
                                                         double score_min) {
  const auto records = io::read_labels(path, /*expect_score=*/true);
  return ingest_pseudo_labels(records, score_min);
}

// ---------------------------------------------------------------------------
// Filters

/// Indices of boxes at least `min_w` x `min_h` pixels.
inline std::vector<std::size_t> pv_size_filter(std::span<const DepthedBox2D> boxes, double min_w,
                                               double min_h) {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    if (boxes[i].width() >= min_w && boxes[i].height() >= min_h) kept.push_back(i);
  }
  return kept;
}

/// An object taking part in collision tests: its BEV footprint and, when it
/// is visible, its image box.
struct CollisionShape {
  BevRect bev;
  std::optional<DepthedBox2D> pv;
};

inline CollisionShape shape_of_existing(const Box3D& box, const FrameTransform& tf,
                                        const CalibMatrices& calib, ImageSize image) {
  return {box3d_to_bev(box, tf), project_box_to_2d(box, calib, image)};
}

inline CollisionShape shape_of_sample(const ObjectSample& s, const FrameTransform& tf) {
  return {box3d_to_bev(s.box, tf), s.patch_box};
}

struct Rejection {
  std::size_t candidate = 0;  // index into the candidate list
  std::string reason;         // "pv_size", "bev_iou", "oais" or "iou"
  std::string against;        // "existing:<i>" or "pasted:<candidate index>"
  double score = 0;
};

struct CollisionOutcome {
  std::vector<std::size_t> kept;  // candidate indices, in acceptance order
  std::vector<Rejection> rejected;
};

/// Greedy acceptance in candidate order. A candidate is kept iff, against
/// every existing object and every already kept candidate, its BEV IoU and
/// its image-plane score stay at or below their thresholds. Rejected
/// candidates never constrain later ones.
inline CollisionOutcome collision_filter(std::span<const CollisionShape> existing,
                                         std::span<const CollisionShape> candidates,
                                         const AugConfig& cfg, Rng& rng,
                                         PvCriterion criterion = PvCriterion::kOais) {
  CollisionOutcome out;
  const double pv_threshold = cfg.oais_threshold;
  auto test = [&](const CollisionShape& c, const CollisionShape& o) -> std::optional<Rejection> {
    const double bev = iou_bev(c.bev, o.bev);
    if (bev > cfg.bev_iou_threshold) return Rejection{0, "bev_iou", "", bev};
    if (c.pv && o.pv) {
      const double pv = criterion == PvCriterion::kOais ? oais(*c.pv, *o.pv, rng)
                                                        : iou_2d(*c.pv, *o.pv);
      if (pv > pv_threshold) return Rejection{0, criterion_name(criterion), "", pv};
    }
    return std::nullopt;
  };

  for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
    std::optional<Rejection> failure;
    for (std::size_t ei = 0; ei < existing.size() && !failure; ++ei) {
      failure = test(candidates[ci], existing[ei]);
      if (failure) failure->against = "existing:" + std::to_string(ei);
    }
    for (std::size_t ki = 0; ki < out.kept.size() && !failure; ++ki) {
      failure = test(candidates[ci], candidates[out.kept[ki]]);
      if (failure) failure->against = "pasted:" + std::to_string(out.kept[ki]);
    }
    if (failure) {
      failure->candidate = ci;
      out.rejected.push_back(std::move(*failure));
    } else {
      out.kept.push_back(ci);
    }
  }
  return out;
}

inline CollisionOutcome collision_filter(std::span<const Box3D> existing,
                                         std::span<const ObjectSample* const> candidates,
                                         const CalibMatrices& calib, ImageSize image,
                                         const AugConfig& cfg, Rng& rng,
                                         PvCriterion criterion = PvCriterion::kOais) {
  const FrameTransform tf(calib);
  std::vector<CollisionShape> e, c;
  for (const auto& b : existing) e.push_back(shape_of_existing(b, tf, calib, image));
  for (const auto* s : candidates) c.push_back(shape_of_sample(*s, tf));
  return collision_filter(e, c, cfg, rng, criterion);
}

// ---------------------------------------------------------------------------
// Pasting

struct PastedObject {
  std::string source_scene;
  std::size_t label_index = 0;
  std::string class_name;
  double depth = 0;
  std::size_t paste_order = 0;  // 0 = pasted first (farthest)
  DepthedBox2D patch_box;
};

struct AugmentedScene {
  PointCloud cloud;
  Image image;
  std::vector<LabelRecord> labels;
  std::vector<PastedObject> provenance;
};

/// Pastes `kept` into the scene: optionally deletes background points inside
/// the pasted boxes, then appends object points, patches and labels in
/// far-to-near order so nearer patches overwrite farther ones.
inline AugmentedScene paste_scene(const PointCloud& cloud, const Image& image,
                                  const std::vector<LabelRecord>& labels,
                                  std::span<const ObjectSample* const> kept,
                                  const CalibMatrices& calib, const AugConfig& cfg) {
  AugmentedScene out{cloud, image, labels, {}};
  if (kept.empty()) return out;

  std::vector<const ObjectSample*> order(kept.begin(), kept.end());
  std::stable_sort(order.begin(), order.end(), [](const ObjectSample* a, const ObjectSample* b) {
    return a->box.location.z > b->box.location.z;
  });

  if (cfg.remove_swallowed_points) {
    const FrameTransform tf(calib);
    std::vector<char> drop(cloud.size(), 0);
    for (const ObjectSample* s : order) {
      for (auto idx : points_in_box3d(cloud.points, s->box, tf)) drop[idx] = 1;
    }
    out.cloud.points.clear();
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      if (!drop[i]) out.cloud.points.push_back(cloud.points[i]);
    }
  }

  for (std::size_t n = 0; n < order.size(); ++n) {
    const ObjectSample& s = *order[n];
    out.cloud.points.insert(out.cloud.points.end(), s.points.begin(), s.points.end());

    const auto& pb = s.patch_box;
    if (s.patch.width != static_cast<std::size_t>(pb.width()) ||
        s.patch.height != static_cast<std::size_t>(pb.height())) {
      throw ConsistencyError("patch of " + s.source_scene + "#" + std::to_string(s.label_index) +
                             " does not match its patch box");
    }
    const auto x0 = static_cast<long>(pb.x1), y0 = static_cast<long>(pb.y1);
    const long xs = std::max(0L, x0), ys = std::max(0L, y0);
    const long xe = std::min(static_cast<long>(out.image.width), x0 + static_cast<long>(s.patch.width));
    const long ye = std::min(static_cast<long>(out.image.height), y0 + static_cast<long>(s.patch.height));
    for (long y = ys; y < ye; ++y) {
      if (xs >= xe) break;
      std::copy_n(s.patch.pixel(static_cast<std::size_t>(xs - x0), static_cast<std::size_t>(y - y0)),
                  static_cast<std::size_t>(xe - xs) * 3,
                  out.image.pixel(static_cast<std::size_t>(xs), static_cast<std::size_t>(y)));
    }

    out.labels.push_back(s.label);
    out.provenance.push_back({s.source_scene, s.label_index, s.class_name(), s.box.location.z, n, pb});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Orchestration

/// One frame to augment. `collision_labels` are the objects known to exist in
/// the scene (ground truth, or ingested pseudo-labels for unlabelled frames);
/// `labels` are the training labels that pasted objects get appended to.
struct SceneInputs {
  std::string id;
  PointCloud cloud;
  Image image;
  CalibMatrices calib;
  std::vector<LabelRecord> labels;
  std::vector<LabelRecord> collision_labels;
};

struct DrawnCandidate {
  std::string class_name;
  std::size_t db_index = 0;
  const ObjectSample* sample = nullptr;
};

struct AugmentResult {
  AugmentedScene scene;
  std::vector<DrawnCandidate> drawn;
  std::vector<Rejection> rejected;         // indices refer to `drawn`
  std::vector<std::size_t> kept;           // indices into `drawn`, acceptance order
  std::vector<CollisionShape> existing;    // shapes the candidates were tested against
};

/// Per-class uniform sampling without replacement, capped by
/// `samples_per_class`; classes are visited in name order.
inline std::vector<DrawnCandidate> draw_candidates(const GtDatabase& db, const AugConfig& cfg,
                                                   Rng& rng) {
  std::vector<DrawnCandidate> drawn;
  for (const auto& [cls, cap] : cfg.samples_per_class) {
    const auto it = db.entries.find(cls);
    if (it == db.entries.end() || cap == 0) continue;
    const auto& pool = it->second;
    const std::size_t n = std::min(cap, pool.size());
    std::vector<std::size_t> idx(pool.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t j = k + static_cast<std::size_t>(rng.below(pool.size() - k));
      std::swap(idx[k], idx[j]);
      drawn.push_back({cls, idx[k], &pool[idx[k]]});
    }
  }
  return drawn;
}

/// The full pipeline for one scene: sample, PV-size filter, collision filter,
/// paste. Deterministic in (cfg.seed, scene id).
inline AugmentResult augment(const SceneInputs& scene, const GtDatabase& db, const AugConfig& cfg,
                             PvCriterion criterion = PvCriterion::kOais) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, scene.id));
  AugmentResult result;
  result.drawn = draw_candidates(db, cfg, rng);

  const FrameTransform tf(scene.calib);
  const ImageSize size{scene.image.width, scene.image.height};
  for (const auto& label : scene.collision_labels) {
    if (label.dont_care()) continue;
    result.existing.push_back(shape_of_existing(box_from_label(label), tf, scene.calib, size));
  }

  std::vector<DepthedBox2D> pv_boxes;
  for (const auto& d : result.drawn) pv_boxes.push_back(d.sample->patch_box);
  const auto sized = pv_size_filter(pv_boxes, cfg.min_patch_w, cfg.min_patch_h);
  std::vector<char> passes_size(result.drawn.size(), 0);
  for (auto i : sized) passes_size[i] = 1;
  for (std::size_t i = 0; i < result.drawn.size(); ++i) {
    if (!passes_size[i]) result.rejected.push_back({i, "pv_size", "", pv_boxes[i].width()});
  }

  std::vector<CollisionShape> shapes;
  for (auto i : sized) shapes.push_back(shape_of_sample(*result.drawn[i].sample, tf));
  auto outcome = collision_filter(result.existing, shapes, cfg, rng, criterion);
  for (auto& r : outcome.rejected) {
    r.candidate = sized[r.candidate];
    if (r.against.starts_with("pasted:")) {
      r.against = "pasted:" + std::to_string(sized[std::stoul(r.against.substr(7))]);
    }
    result.rejected.push_back(std::move(r));
  }
  std::sort(result.rejected.begin(), result.rejected.end(),
            [](const Rejection& a, const Rejection& b) { return a.candidate < b.candidate; });

  std::vector<const ObjectSample*> kept_samples;
  for (auto k : outcome.kept) {
    result.kept.push_back(sized[k]);
    kept_samples.push_back(result.drawn[sized[k]].sample);
  }
  result.scene = paste_scene(scene.cloud, scene.image, scene.labels, kept_samples, scene.calib, cfg);
  return result;
}

}  // namespace occdistill::cmaug

#endif  // OCCDISTILL_CMAUG_AUGMENT_HPP
