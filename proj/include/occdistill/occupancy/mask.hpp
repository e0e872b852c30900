#ifndef OCCDISTILL_OCCUPANCY_MASK_HPP
#define OCCDISTILL_OCCUPANCY_MASK_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "occdistill/error.hpp"
#include "occdistill/io/npy.hpp"
#include "occdistill/io/point_cloud.hpp"
#include "occdistill/occupancy/grid.hpp"

namespace occdistill::occupancy {

/// W_BEV x H_BEV grid; cell (i, j) covers forward index i and lateral index j.
class OccupancyMask {
 public:
  OccupancyMask() = default;
  OccupancyMask(std::size_t width, std::size_t height)
      : width_(width), height_(height), values_(width * height, 0.f) {}

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  float operator()(std::size_t i, std::size_t j) const { return values_[i * height_ + j]; }
  float& operator()(std::size_t i, std::size_t j) { return values_[i * height_ + j]; }
  std::span<const float> values() const noexcept { return values_; }
  std::span<float> values() noexcept { return values_; }

  bool is_binary() const {
    for (float v : values_) {
      if (v != 0.f && v != 1.f) return false;
    }
    return true;
  }

  double sum() const {
    double s = 0;
    for (float v : values_) s += v;
    return s;
  }

  DenseTensor to_tensor() const {
    auto t = DenseTensor::matrix(width_, height_);
    std::copy(values_.begin(), values_.end(), t.data().begin());
    return t;
  }

  static OccupancyMask from_tensor(const DenseTensor& t) {
    if (t.rank() != 2 && !(t.rank() == 3 && t.channels() == 1)) {
      throw DimensionError("occupancy mask must be a 2-D tensor, got shape " +
                           t.shape_string());
    }
    OccupancyMask m(t.width(), t.height());
    std::copy(t.data().begin(), t.data().end(), m.values_.begin());
    for (float v : m.values_) {
      if (!(v >= 0.f && v <= 1.f)) throw DimensionError("mask values must lie in [0, 1]");
    }
    return m;
  }

  friend bool operator==(const OccupancyMask&, const OccupancyMask&) = default;

 private:
  std::size_t width_ = 0, height_ = 0;
  std::vector<float> values_;
};

/// Binary BEV occupancy: a cell is 1 iff at least one point falls in its
/// column with z in [z_min, z_max). Points are binned straight into BEV cells
/// through their fine-voxel index, which is the same as filling the fine
/// voxel grid and OR-collapsing each 8 x 8 x D block, without materialising it.
inline OccupancyMask build_occupancy_mask(std::span<const LidarPoint> points,
                                          const GridConfig& cfg) {
  const GridDims dims = derive_bev_dims(cfg);
  OccupancyMask mask(dims.bev_w, dims.bev_h);
  const auto ds = static_cast<std::size_t>(cfg.bev_downsample);
  for (const auto& p : points) {
    const double x = p.x, y = p.y, z = p.z;
    if (!(x >= cfg.x_range.min && x < cfg.x_range.max && y >= cfg.y_range.min &&
          y < cfg.y_range.max && z >= cfg.z_range.min && z < cfg.z_range.max)) {
      continue;
    }
    auto fi = static_cast<std::size_t>(std::floor((x - cfg.x_range.min) / cfg.vx));
    auto fj = static_cast<std::size_t>(std::floor((y - cfg.y_range.min) / cfg.vy));
    fi = std::min(fi, dims.fine_w - 1);
    fj = std::min(fj, dims.fine_h - 1);
    mask(fi / ds, fj / ds) = 1.f;
  }
  return mask;
}

inline OccupancyMask build_occupancy_mask(const PointCloud& cloud, const GridConfig& cfg) {
  return build_occupancy_mask(std::span<const LidarPoint>(cloud.points), cfg);
}

}  // namespace occdistill::occupancy

#endif  // OCCDISTILL_OCCUPANCY_MASK_HPP
