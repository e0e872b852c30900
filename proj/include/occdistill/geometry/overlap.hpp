#ifndef OCCDISTILL_GEOMETRY_OVERLAP_HPP
#define OCCDISTILL_GEOMETRY_OVERLAP_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "occdistill/geometry/types.hpp"
#include "occdistill/rng.hpp"

namespace occdistill {

inline double intersection_area(const DepthedBox2D& a, const DepthedBox2D& b) {
  const double w = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double h = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  return (w > 0 && h > 0) ? w * h : 0.0;
}

inline double iou_2d(const DepthedBox2D& a, const DepthedBox2D& b) {
  const double inter = intersection_area(a, b);
  if (inter <= 0) return 0.0;
  return inter / (a.area() + b.area() - inter);
}

/// Intersection over the area of `occluded`, the box taken to be behind.
inline double occlusion_score(const DepthedBox2D& a, const DepthedBox2D& b,
                              bool a_is_occluded) {
  const double inter = intersection_area(a, b);
  if (inter <= 0) return 0.0;
  return std::min(1.0, inter / (a_is_occluded ? a : b).area());
}

/// Occlusion-aware intersection score: intersection area over the area of the
/// deeper box. Equal depths pick the occluded box with a coin from `tie_break`;
/// the source is only consumed in that case.
inline double oais(const DepthedBox2D& a, const DepthedBox2D& b, Rng& tie_break) {
  bool a_deeper;
  if (a.depth != b.depth) {
    a_deeper = a.depth > b.depth;
  } else {
    a_deeper = tie_break.coin();
  }
  return occlusion_score(a, b, a_deeper);
}

/// Lowest OAIS any legal tie-break could produce. Equals oais() whenever the
/// depths differ.
inline double oais_lower(const DepthedBox2D& a, const DepthedBox2D& b) {
  if (a.depth != b.depth) return occlusion_score(a, b, a.depth > b.depth);
  return std::min(occlusion_score(a, b, true), occlusion_score(a, b, false));
}

// ---------------------------------------------------------------------------
// Rotated rectangles on the ground plane.

struct Point2 {
  double x = 0, y = 0;
};

/// Corners in counter-clockwise order.
inline std::array<Point2, 4> bev_corners(const BevRect& r) {
  const double c = std::cos(r.yaw), s = std::sin(r.yaw);
  const double hl = r.l / 2, hw = r.w / 2;
  const std::array<Point2, 4> local{{{hl, hw}, {-hl, hw}, {-hl, -hw}, {hl, -hw}}};
  std::array<Point2, 4> out;
  for (int k = 0; k < 4; ++k) {
    out[k] = {r.cx + c * local[k].x - s * local[k].y,
              r.cy + s * local[k].x + c * local[k].y};
  }
  return out;
}

inline double polygon_area(const std::vector<Point2>& poly) {
  double twice = 0;
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % n];
    twice += p.x * q.y - q.x * p.y;
  }
  return std::abs(twice) / 2;
}

/// Sutherland-Hodgman: clips `subject` by every edge of the convex,
/// counter-clockwise polygon `clip`.
inline std::vector<Point2> clip_convex(std::vector<Point2> subject,
                                       const std::vector<Point2>& clip) {
  for (std::size_t e = 0; e < clip.size() && !subject.empty(); ++e) {
    const Point2 a = clip[e];
    const Point2 b = clip[(e + 1) % clip.size()];
    auto side = [&](Point2 p) {
      return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    };
    std::vector<Point2> out;
    out.reserve(subject.size() + 2);
    for (std::size_t i = 0; i < subject.size(); ++i) {
      const Point2 cur = subject[i];
      const Point2 nxt = subject[(i + 1) % subject.size()];
      const double sc = side(cur), sn = side(nxt);
      if (sc >= 0) out.push_back(cur);
      if ((sc >= 0) != (sn >= 0)) {
        const double t = sc / (sc - sn);
        out.push_back({cur.x + t * (nxt.x - cur.x), cur.y + t * (nxt.y - cur.y)});
      }
    }
    subject = std::move(out);
  }
  return subject;
}

inline double intersection_area(const BevRect& a, const BevRect& b) {
  const auto ca = bev_corners(a), cb = bev_corners(b);
  const auto poly = clip_convex({ca.begin(), ca.end()}, {cb.begin(), cb.end()});
  if (poly.size() < 3) return 0.0;
  const double area = polygon_area(poly);
  // Touching or collinear edges leave slivers of rounding noise; count them as
  // disjoint.
  return area > 1e-12 * (a.area() + b.area()) ? area : 0.0;
}

inline double iou_bev(const BevRect& a, const BevRect& b) {
  const double inter = intersection_area(a, b);
  if (inter <= 0) return 0.0;
  return std::clamp(inter / (a.area() + b.area() - inter), 0.0, 1.0);
}

}  // namespace occdistill

#endif  // OCCDISTILL_GEOMETRY_OVERLAP_HPP
