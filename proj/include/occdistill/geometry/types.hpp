#ifndef OCCDISTILL_GEOMETRY_TYPES_HPP
#define OCCDISTILL_GEOMETRY_TYPES_HPP

#include <cmath>
#include <numbers>
#include <string>

namespace occdistill {

struct Vec3 {
  double x = 0, y = 0, z = 0;

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double a) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  a = std::remainder(a, kTwoPi);  // [-pi, pi]
  if (a <= -std::numbers::pi) a += kTwoPi;
  return a;
}

/// 3D object box in the rectified camera frame (KITTI convention): `location`
/// is the bottom-face center, the box extends upward to y - h, `l` runs along
/// the heading and `ry` is the yaw about the camera y axis.
struct Box3D {
  Vec3 location;
  double h = 1, w = 1, l = 1;
  double ry = 0;
  std::string class_name;

  friend bool operator==(const Box3D&, const Box3D&) = default;
};

/// Axis-aligned image box with the depth of the 3D box it was projected from.
struct DepthedBox2D {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  double depth = 0;

  double width() const noexcept { return x2 - x1; }
  double height() const noexcept { return y2 - y1; }
  double area() const noexcept { return (x2 - x1) * (y2 - y1); }

  friend bool operator==(const DepthedBox2D&, const DepthedBox2D&) = default;
};

/// Oriented rectangle on the LiDAR ground plane; `l` lies along `yaw`.
struct BevRect {
  double cx = 0, cy = 0;
  double l = 1, w = 1;
  double yaw = 0;

  double area() const noexcept { return l * w; }

  friend bool operator==(const BevRect&, const BevRect&) = default;
};

}  // namespace occdistill

#endif  // OCCDISTILL_GEOMETRY_TYPES_HPP
