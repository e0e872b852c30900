#ifndef OCCDISTILL_GEOMETRY_TRANSFORMS_HPP
#define OCCDISTILL_GEOMETRY_TRANSFORMS_HPP

#include <array>
#include <span>
#include <vector>

#include "occdistill/geometry/types.hpp"
#include "occdistill/io/calib.hpp"
#include "occdistill/io/point_cloud.hpp"

namespace occdistill {

using Mat3 = std::array<double, 9>;

inline Vec3 mul(const Mat3& m, Vec3 v) {
  return {m[0] * v.x + m[1] * v.y + m[2] * v.z, m[3] * v.x + m[4] * v.y + m[5] * v.z,
          m[6] * v.x + m[7] * v.y + m[8] * v.z};
}

inline Mat3 mul(const Mat3& a, const Mat3& b) {
  Mat3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) r[i * 3 + j] += a[i * 3 + k] * b[k * 3 + j];
  return r;
}

/// General 3x3 inverse via the adjugate; calibration rotations are rounded in
/// KITTI files so the transpose is not an exact inverse.
inline Mat3 inverse(const Mat3& m) {
  const double c00 = m[4] * m[8] - m[5] * m[7];
  const double c01 = m[5] * m[6] - m[3] * m[8];
  const double c02 = m[3] * m[7] - m[4] * m[6];
  const double det = m[0] * c00 + m[1] * c01 + m[2] * c02;
  const double s = 1.0 / det;
  return {c00 * s,
          (m[2] * m[7] - m[1] * m[8]) * s,
          (m[1] * m[5] - m[2] * m[4]) * s,
          c01 * s,
          (m[0] * m[8] - m[2] * m[6]) * s,
          (m[2] * m[3] - m[0] * m[5]) * s,
          c02 * s,
          (m[1] * m[6] - m[0] * m[7]) * s,
          (m[0] * m[4] - m[1] * m[3]) * s};
}

/// Precomputed LiDAR <-> rectified-camera mapping for one calibration.
class FrameTransform {
 public:
  explicit FrameTransform(const CalibMatrices& c) {
    const auto& t = c.tr_velo_to_cam;
    const Mat3 rot{t[0], t[1], t[2], t[4], t[5], t[6], t[8], t[9], t[10]};
    const Vec3 trans{t[3], t[7], t[11]};
    // p_cam = R0 * (rot * p + trans)
    fwd_rot_ = mul(c.r0, rot);
    fwd_trans_ = mul(c.r0, trans);
    inv_rot_ = inverse(fwd_rot_);
  }

  Vec3 to_camera(Vec3 p) const { return mul(fwd_rot_, p) + fwd_trans_; }
  Vec3 to_lidar(Vec3 p) const { return mul(inv_rot_, p - fwd_trans_); }
  /// Rotates a direction (no translation) from camera to LiDAR frame.
  Vec3 direction_to_lidar(Vec3 d) const { return mul(inv_rot_, d); }

 private:
  Mat3 fwd_rot_{};
  Vec3 fwd_trans_{};
  Mat3 inv_rot_{};
};

inline Vec3 lidar_to_camera(Vec3 p, const CalibMatrices& calib) {
  return FrameTransform(calib).to_camera(p);
}

inline Vec3 camera_to_lidar(Vec3 p, const CalibMatrices& calib) {
  return FrameTransform(calib).to_lidar(p);
}

inline std::vector<Vec3> lidar_to_camera(std::span<const LidarPoint> points,
                                         const CalibMatrices& calib) {
  const FrameTransform tf(calib);
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(tf.to_camera({p.x, p.y, p.z}));
  return out;
}

inline std::vector<Vec3> camera_to_lidar(std::span<const Vec3> points,
                                         const CalibMatrices& calib) {
  const FrameTransform tf(calib);
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(tf.to_lidar(p));
  return out;
}

}  // namespace occdistill

#endif  // OCCDISTILL_GEOMETRY_TRANSFORMS_HPP
