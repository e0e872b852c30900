#ifndef OCCDISTILL_CMAUG_COLLISION_STATS_HPP
#define OCCDISTILL_CMAUG_COLLISION_STATS_HPP

#include <map>
#include <string>
#include <vector>

#include "occdistill/cmaug/audit.hpp"
#include "occdistill/cmaug/augment.hpp"
#include "occdistill/cmaug/synthetic.hpp"

namespace occdistill::cmaug {

/// Admitted pairs whose deeper box is at least this fraction covered count as
/// severe occlusions.
inline constexpr double kSevereCoverage = 0.9;

struct CollisionStats {
  std::size_t trials = 0;
  std::size_t drawn = 0;
  std::size_t kept = 0;
  std::size_t admitted_pairs = 0;
  std::size_t scored_pairs = 0;  // admitted pairs visible in both views
  std::size_t severe_admitted = 0;
  double score_sum = 0;  // criterion score over scored pairs
  std::map<std::string, std::size_t> rejections;

  double mean_pair_score() const { return scored_pairs ? score_sum / static_cast<double>(scored_pairs) : 0.0; }

  void merge(const CollisionStats& o) {
    trials += o.trials;
    drawn += o.drawn;
    kept += o.kept;
    admitted_pairs += o.admitted_pairs;
    scored_pairs += o.scored_pairs;
    severe_admitted += o.severe_admitted;
    score_sum += o.score_sum;
    for (const auto& [k, v] : o.rejections) rejections[k] += v;
  }
};

/// Tabulates one filtering run: `kept_shapes` are the accepted candidates.
inline CollisionStats tabulate(std::span<const CollisionShape> existing,
                               std::span<const CollisionShape> kept_shapes, std::size_t drawn,
                               std::span<const Rejection> rejected, PvCriterion criterion) {
  CollisionStats st;
  st.trials = 1;
  st.drawn = drawn;
  st.kept = kept_shapes.size();
  for (const auto& r : rejected) ++st.rejections[r.reason];
  for (const auto& p : pasted_pair_scores(existing, kept_shapes)) {
    ++st.admitted_pairs;
    if (!p.oais) continue;
    ++st.scored_pairs;
    st.score_sum += criterion == PvCriterion::kOais ? *p.oais : *p.iou;
    if (*p.oais >= kSevereCoverage) ++st.severe_admitted;
  }
  return st;
}

inline CollisionStats tabulate(const AugmentResult& r, const CalibMatrices& calib,
                               PvCriterion criterion) {
  const FrameTransform tf(calib);
  std::vector<CollisionShape> kept;
  for (auto k : r.kept) kept.push_back(shape_of_sample(*r.drawn[k].sample, tf));
  return tabulate(r.existing, kept, r.drawn.size(), r.rejected, criterion);
}

/// One synthetic trial: a few existing cars plus candidates, some of which
/// hide behind an existing car or another candidate with image-area ratio
/// below `contained_ratio`, so IoU stays under 0.5 while the deeper box is
/// fully covered.
inline CollisionStats synthetic_trial(std::uint64_t seed, std::size_t trial, const AugConfig& cfg,
                                      PvCriterion criterion, double contained_ratio = 0.45) {
  Rng rng(derive_seed(seed, "synthetic#" + std::to_string(trial)));
  const auto calib = synthetic::kitti_calib();
  const auto image = synthetic::kImageSize;
  const FrameTransform tf(calib);
  const auto& car = synthetic::kClasses[0];

  std::vector<Box3D> existing_boxes;
  for (int attempt = 0; existing_boxes.size() < 3 && attempt < 100; ++attempt) {
    Box3D b = synthetic::random_box(rng, car, 8, 25);
    bool clear = true;
    for (const auto& o : existing_boxes) {
      if (iou_bev(box3d_to_bev(b, tf), box3d_to_bev(o, tf)) > 0) clear = false;
    }
    if (clear && project_box_to_2d(b, calib, image)) existing_boxes.push_back(b);
  }

  std::vector<Box3D> candidate_boxes;
  for (int n = 0; n < 4; ++n) {
    candidate_boxes.push_back(synthetic::random_box(rng, synthetic::kClasses[rng.below(3)], 6, 45));
  }
  for (const auto& e : existing_boxes) {
    if (auto far = synthetic::contained_behind(rng, e, calib, image, contained_ratio)) {
      candidate_boxes.push_back(*far);
    }
  }
  const Box3D host = synthetic::random_box(rng, car, 8, 20);
  if (auto far = synthetic::contained_behind(rng, host, calib, image, contained_ratio)) {
    candidate_boxes.push_back(host);
    candidate_boxes.push_back(*far);
  }
  for (std::size_t i = candidate_boxes.size(); i > 1; --i) {
    std::swap(candidate_boxes[i - 1], candidate_boxes[rng.below(i)]);
  }

  std::vector<CollisionShape> existing;
  for (const auto& b : existing_boxes) existing.push_back(shape_of_existing(b, tf, calib, image));

  std::vector<ObjectSample> samples;
  for (std::size_t i = 0; i < candidate_boxes.size(); ++i) {
    if (auto s = synthetic::make_sample(rng, candidate_boxes[i], calib, image, "synthetic", i, 10)) {
      samples.push_back(std::move(*s));
    }
  }
  std::vector<DepthedBox2D> pv;
  for (const auto& s : samples) pv.push_back(s.patch_box);
  const auto sized = pv_size_filter(pv, cfg.min_patch_w, cfg.min_patch_h);
  std::vector<Rejection> rejected;
  for (std::size_t i = 0, k = 0; i < samples.size(); ++i) {
    if (k < sized.size() && sized[k] == i) {
      ++k;
    } else {
      rejected.push_back({i, "pv_size", "", pv[i].width()});
    }
  }
  std::vector<CollisionShape> shapes;
  for (auto i : sized) shapes.push_back(shape_of_sample(samples[i], tf));
  const auto outcome = collision_filter(existing, shapes, cfg, rng, criterion);
  rejected.insert(rejected.end(), outcome.rejected.begin(), outcome.rejected.end());
  std::vector<CollisionShape> kept;
  for (auto k : outcome.kept) kept.push_back(shapes[k]);
  return tabulate(existing, kept, samples.size(), rejected, criterion);
}

}  // namespace occdistill::cmaug

#endif  // OCCDISTILL_CMAUG_COLLISION_STATS_HPP
