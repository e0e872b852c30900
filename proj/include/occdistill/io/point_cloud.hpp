#ifndef OCCDISTILL_IO_POINT_CLOUD_HPP
#define OCCDISTILL_IO_POINT_CLOUD_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "occdistill/error.hpp"
#include "occdistill/io/file.hpp"

namespace occdistill {

/// One LiDAR return in the sensor frame (x forward, y left, z up, meters).
struct LidarPoint {
  float x = 0.f;
  float y = 0.f;
  float z = 0.f;
  float intensity = 0.f;

  friend bool operator==(const LidarPoint&, const LidarPoint&) = default;
};

struct PointCloud {
  std::vector<LidarPoint> points;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }

  friend bool operator==(const PointCloud&, const PointCloud&) = default;
};

namespace io {

static_assert(std::endian::native == std::endian::little,
              "velodyne and NPY codecs assume a little-endian host");

/// Parses a KITTI velodyne scan: packed little-endian float32 (x, y, z, i).
///
/// Non-finite coordinates are a hard error reported with their byte offset.
/// Intensities outside [0, 1] are clamped and summarised in `warnings` when
/// given.
inline PointCloud decode_point_cloud(std::span<const std::uint8_t> bytes,
                                     const std::filesystem::path& origin,
                                     std::vector<std::string>* warnings = nullptr) {
  constexpr std::size_t kStride = 4 * sizeof(float);
  if (bytes.size() % kStride != 0) {
    throw ParseError(origin, "byte " + std::to_string(bytes.size()),
                     "truncated point cloud: size is not a multiple of 16");
  }
  PointCloud cloud;
  cloud.points.resize(bytes.size() / kStride);
  std::size_t clamped = 0;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    float v[4];
    std::memcpy(v, bytes.data() + i * kStride, kStride);
    for (int k = 0; k < 3; ++k) {
      if (!std::isfinite(v[k])) {
        throw ParseError(origin,
                         "byte " + std::to_string(i * kStride + k * sizeof(float)),
                         "non-finite coordinate in point " + std::to_string(i));
      }
    }
    if (!(v[3] >= 0.f && v[3] <= 1.f)) {
      v[3] = std::isnan(v[3]) ? 0.f : std::clamp(v[3], 0.f, 1.f);
      ++clamped;
    }
    cloud.points[i] = {v[0], v[1], v[2], v[3]};
  }
  if (clamped > 0 && warnings != nullptr) {
    warnings->push_back(origin.string() + ": clamped " + std::to_string(clamped) +
                        " intensities into [0, 1]");
  }
  return cloud;
}

inline PointCloud read_point_cloud(const std::filesystem::path& path,
                                   std::vector<std::string>* warnings = nullptr) {
  return decode_point_cloud(read_bytes(path), path, warnings);
}

inline std::vector<std::uint8_t> encode_point_cloud(const PointCloud& cloud) {
  std::vector<std::uint8_t> bytes(cloud.size() * sizeof(LidarPoint));
  static_assert(sizeof(LidarPoint) == 16);
  if (!bytes.empty()) std::memcpy(bytes.data(), cloud.points.data(), bytes.size());
  return bytes;
}

inline void write_point_cloud(const PointCloud& cloud,
                              const std::filesystem::path& path) {
  write_bytes(path, encode_point_cloud(cloud));
}

}  // namespace io
}  // namespace occdistill

#endif  // OCCDISTILL_IO_POINT_CLOUD_HPP
