#ifndef OCCDISTILL_CMAUG_AUDIT_HPP
#define OCCDISTILL_CMAUG_AUDIT_HPP

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "occdistill/cmaug/augment.hpp"
#include "occdistill/geometry/overlap.hpp"

namespace occdistill::cmaug {

/// Scores of one pair that involves at least one pasted object.
struct PairScore {
  std::size_t pasted = 0;  // index into the kept list
  bool other_existing = false;
  std::size_t other = 0;  // existing index or kept index
  double bev_iou = 0;
  std::optional<double> iou;    // absent when either object is off-image
  std::optional<double> oais;   // lowest value over legal equal-depth choices
};

inline std::vector<PairScore> pasted_pair_scores(std::span<const CollisionShape> existing,
                                                 std::span<const CollisionShape> pasted) {
  std::vector<PairScore> out;
  auto score = [](const CollisionShape& a, const CollisionShape& b, std::size_t k, bool ex,
                  std::size_t other) {
    PairScore p;
    p.pasted = k;
    p.other_existing = ex;
    p.other = other;
    p.bev_iou = iou_bev(a.bev, b.bev);
    if (a.pv && b.pv) {
      p.iou = iou_2d(*a.pv, *b.pv);
      p.oais = oais_lower(*a.pv, *b.pv);
    }
    return p;
  };
  for (std::size_t k = 0; k < pasted.size(); ++k) {
    for (std::size_t e = 0; e < existing.size(); ++e) {
      out.push_back(score(pasted[k], existing[e], k, true, e));
    }
    for (std::size_t j = 0; j < k; ++j) out.push_back(score(pasted[k], pasted[j], k, false, j));
  }
  return out;
}

struct AuditReport {
  std::vector<std::string> violations;
  bool ok() const noexcept { return violations.empty(); }
};

/// Pixels whose final value does not come from the nearest patch covering
/// them. Ties in depth accept any of the tied patches.
inline std::size_t count_dominance_violations(const AugmentedScene& out,
                                              std::span<const ObjectSample* const> pasted) {
  const std::size_t W = out.image.width, H = out.image.height;
  std::vector<double> nearest(W * H, std::numeric_limits<double>::infinity());
  auto for_each_pixel = [&](const ObjectSample& s, auto&& fn) {
    const auto x0 = static_cast<long>(s.patch_box.x1), y0 = static_cast<long>(s.patch_box.y1);
    for (std::size_t py = 0; py < s.patch.height; ++py) {
      for (std::size_t px = 0; px < s.patch.width; ++px) {
        const long x = x0 + static_cast<long>(px), y = y0 + static_cast<long>(py);
        if (x < 0 || y < 0 || x >= static_cast<long>(W) || y >= static_cast<long>(H)) continue;
        fn(static_cast<std::size_t>(y) * W + static_cast<std::size_t>(x), px, py);
      }
    }
  };
  for (const auto* s : pasted) {
    for_each_pixel(*s, [&](std::size_t at, std::size_t, std::size_t) {
      nearest[at] = std::min(nearest[at], s->box.location.z);
    });
  }
  std::vector<char> satisfied(W * H, 0);
  for (const auto* s : pasted) {
    for_each_pixel(*s, [&](std::size_t at, std::size_t px, std::size_t py) {
      if (s->box.location.z != nearest[at]) return;
      const auto* want = s->patch.pixel(px, py);
      const auto* got = &out.image.rgb[at * 3];
      if (want[0] == got[0] && want[1] == got[1] && want[2] == got[2]) satisfied[at] = 1;
    });
  }
  std::size_t bad = 0;
  for (std::size_t at = 0; at < W * H; ++at) {
    if (std::isfinite(nearest[at]) && !satisfied[at]) ++bad;
  }
  return bad;
}

/// Independent post-hoc check of an augmentation result: pairwise collision
/// thresholds, pasted-point containment, far-to-near pixel dominance and
/// label bookkeeping.
inline AuditReport audit_augmentation(const SceneInputs& scene, const AugmentResult& result,
                                      const AugConfig& cfg,
                                      PvCriterion criterion = PvCriterion::kOais) {
  AuditReport report;
  const FrameTransform tf(scene.calib);
  std::vector<const ObjectSample*> pasted;
  std::vector<CollisionShape> pasted_shapes;
  for (auto k : result.kept) {
    pasted.push_back(result.drawn[k].sample);
    pasted_shapes.push_back(shape_of_sample(*pasted.back(), tf));
  }

  for (const auto& p : pasted_pair_scores(result.existing, pasted_shapes)) {
    const std::string who = "pasted " + std::to_string(p.pasted) + " vs " +
                            (p.other_existing ? "existing " : "pasted ") + std::to_string(p.other);
    if (p.bev_iou > cfg.bev_iou_threshold) {
      report.violations.push_back(who + ": BEV IoU " + std::to_string(p.bev_iou));
    }
    const auto pv = criterion == PvCriterion::kOais ? p.oais : p.iou;
    if (pv && *pv > cfg.oais_threshold) {
      report.violations.push_back(who + ": " + criterion_name(criterion) + " " +
                                  std::to_string(*pv));
    }
  }

  for (std::size_t k = 0; k < pasted.size(); ++k) {
    const auto inside = points_in_box3d(pasted[k]->points, pasted[k]->box, tf);
    if (inside.size() != pasted[k]->points.size()) {
      report.violations.push_back("pasted " + std::to_string(k) + ": " +
                                  std::to_string(pasted[k]->points.size() - inside.size()) +
                                  " points outside its box");
    }
  }

  if (const auto bad = count_dominance_violations(result.scene, pasted); bad > 0) {
    report.violations.push_back(std::to_string(bad) + " pixels violate far-to-near order");
  }

  if (result.scene.labels.size() != scene.labels.size() + pasted.size() ||
      result.scene.provenance.size() != pasted.size()) {
    report.violations.push_back("label or provenance count mismatch");
  }
  return report;
}

}  // namespace occdistill::cmaug

#endif  // OCCDISTILL_CMAUG_AUDIT_HPP
