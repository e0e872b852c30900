#ifndef OCCDISTILL_GEOMETRY_BOX3D_HPP
#define OCCDISTILL_GEOMETRY_BOX3D_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "occdistill/geometry/transforms.hpp"
#include "occdistill/geometry/types.hpp"
#include "occdistill/io/calib.hpp"
#include "occdistill/io/labels.hpp"
#include "occdistill/io/point_cloud.hpp"

namespace occdistill {

struct ImageSize {
  std::size_t width = 0;
  std::size_t height = 0;
};

inline Box3D box_from_label(const LabelRecord& r) {
  Box3D b;
  b.location = {r.location[0], r.location[1], r.location[2]};
  b.h = r.dims[0];
  b.w = r.dims[1];
  b.l = r.dims[2];
  b.ry = r.ry;
  b.class_name = r.class_name;
  return b;
}

/// The 8 corners in the camera frame. Indices 0-3 form the bottom face
/// (y = location.y), 4-7 the top face (y = location.y - h).
inline std::array<Vec3, 8> box3d_corners(const Box3D& b) {
  const double c = std::cos(b.ry), s = std::sin(b.ry);
  const double hl = b.l / 2, hw = b.w / 2;
  const std::array<std::array<double, 2>, 4> footprint{
      {{hl, hw}, {hl, -hw}, {-hl, -hw}, {-hl, hw}}};
  std::array<Vec3, 8> out;
  for (int k = 0; k < 4; ++k) {
    const double x = footprint[k][0], z = footprint[k][1];
    const Vec3 rotated{c * x + s * z, 0.0, -s * x + c * z};
    out[k] = b.location + rotated;
    out[k + 4] = out[k] + Vec3{0, -b.h, 0};
  }
  return out;
}

/// Expresses a camera-frame point in the box's local frame (x along l,
/// y downward from the bottom face, z along w).
inline Vec3 to_box_local(const Box3D& b, Vec3 p_cam) {
  const double c = std::cos(b.ry), s = std::sin(b.ry);
  const Vec3 d = p_cam - b.location;
  return {c * d.x - s * d.z, d.y, s * d.x + c * d.z};
}

/// Image-plane hull of the projected corners before clipping. Absent when any
/// corner lies at or behind the camera plane.
inline std::optional<DepthedBox2D> project_box_unclipped(const Box3D& b,
                                                         const CalibMatrices& calib) {
  const auto& P = calib.p2;
  DepthedBox2D hull{INFINITY, INFINITY, -INFINITY, -INFINITY, b.location.z};
  for (const Vec3& p : box3d_corners(b)) {
    const double w = P[8] * p.x + P[9] * p.y + P[10] * p.z + P[11];
    if (p.z <= 0.0 || w <= 0.0) return std::nullopt;
    const double u = (P[0] * p.x + P[1] * p.y + P[2] * p.z + P[3]) / w;
    const double v = (P[4] * p.x + P[5] * p.y + P[6] * p.z + P[7]) / w;
    hull.x1 = std::min(hull.x1, u);
    hull.x2 = std::max(hull.x2, u);
    hull.y1 = std::min(hull.y1, v);
    hull.y2 = std::max(hull.y2, v);
  }
  return hull;
}

/// Projects `b` through P2 and clips the hull to the image. The 2D box takes
/// the depth of the 3D box it came from.
inline std::optional<DepthedBox2D> project_box_to_2d(const Box3D& b,
                                                     const CalibMatrices& calib,
                                                     ImageSize image) {
  auto hull = project_box_unclipped(b, calib);
  if (!hull) return std::nullopt;
  hull->x1 = std::clamp(hull->x1, 0.0, static_cast<double>(image.width));
  hull->x2 = std::clamp(hull->x2, 0.0, static_cast<double>(image.width));
  hull->y1 = std::clamp(hull->y1, 0.0, static_cast<double>(image.height));
  hull->y2 = std::clamp(hull->y2, 0.0, static_cast<double>(image.height));
  if (!(hull->x1 < hull->x2 && hull->y1 < hull->y2)) return std::nullopt;
  return hull;
}

/// Footprint of `b` on the LiDAR ground plane.
inline BevRect box3d_to_bev(const Box3D& b, const FrameTransform& tf) {
  const Vec3 center = tf.to_lidar(b.location);
  const Vec3 heading =
      tf.direction_to_lidar({std::cos(b.ry), 0.0, -std::sin(b.ry)});
  return {center.x, center.y, b.l, b.w, std::atan2(heading.y, heading.x)};
}

inline BevRect box3d_to_bev(const Box3D& b, const CalibMatrices& calib) {
  return box3d_to_bev(b, FrameTransform(calib));
}

inline constexpr double kInsideTolerance = 1e-6;

/// Indices of points inside the cuboid, faces included (1e-6 m tolerance).
inline std::vector<std::size_t> points_in_box3d(std::span<const LidarPoint> points,
                                                const Box3D& b,
                                                const FrameTransform& tf) {
  std::vector<std::size_t> inside;
  const double hl = b.l / 2 + kInsideTolerance, hw = b.w / 2 + kInsideTolerance;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    const Vec3 local = to_box_local(b, tf.to_camera({p.x, p.y, p.z}));
    if (std::abs(local.x) <= hl && std::abs(local.z) <= hw &&
        local.y <= kInsideTolerance && local.y >= -b.h - kInsideTolerance) {
      inside.push_back(i);
    }
  }
  return inside;
}

inline std::vector<std::size_t> points_in_box3d(std::span<const LidarPoint> points,
                                                const Box3D& b,
                                                const CalibMatrices& calib) {
  return points_in_box3d(points, b, FrameTransform(calib));
}

}  // namespace occdistill

#endif  // OCCDISTILL_GEOMETRY_BOX3D_HPP
