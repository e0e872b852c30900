#ifndef OCCDISTILL_OCCUPANCY_GRID_HPP
#define OCCDISTILL_OCCUPANCY_GRID_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "occdistill/error.hpp"

namespace occdistill::occupancy {

struct Range {
  double min = 0, max = 0;
  double span() const noexcept { return max - min; }
};

/// Point-cloud range and voxelisation of the LiDAR branch. The defaults give
/// a 1120 x 1504 x 40 fine grid and a 140 x 188 BEV map of 0.32 m cells.
struct GridConfig {
  Range x_range{2.0, 46.8};
  Range y_range{-30.08, 30.08};
  Range z_range{-3.0, 1.0};
  double vx = 0.04, vy = 0.04, vz = 0.1;
  int bev_downsample = 8;
};

struct GridDims {
  std::size_t fine_w = 0, fine_h = 0, depth = 0;  // W, H, D
  std::size_t bev_w = 0, bev_h = 0;               // W_BEV, H_BEV
  double cell_x = 0, cell_y = 0, cell_z = 0;      // BEV cell footprint and column height
};

namespace detail {

inline std::size_t exact_count(const Range& r, double voxel, const char* axis) {
  if (!(r.max > r.min)) {
    throw ConfigError(std::string(axis) + "-range must satisfy max > min");
  }
  if (!(voxel > 0)) throw ConfigError(std::string(axis) + " voxel size must be positive");
  const double ratio = r.span() / voxel;
  const double n = std::round(ratio);
  if (n < 1 || std::abs(ratio - n) > 1e-6 * std::max(1.0, n)) {
    throw ConfigError(std::string(axis) + "-span " + std::to_string(r.span()) +
                      " is not an integer multiple of voxel size " +
                      std::to_string(voxel));
  }
  return static_cast<std::size_t>(n);
}

}  // namespace detail

inline GridDims derive_bev_dims(const GridConfig& cfg) {
  if (cfg.bev_downsample < 1) throw ConfigError("bev_downsample must be >= 1");
  GridDims d;
  d.fine_w = detail::exact_count(cfg.x_range, cfg.vx, "x");
  d.fine_h = detail::exact_count(cfg.y_range, cfg.vy, "y");
  d.depth = detail::exact_count(cfg.z_range, cfg.vz, "z");
  const auto ds = static_cast<std::size_t>(cfg.bev_downsample);
  if (d.fine_w % ds != 0) {
    throw ConfigError("x voxel count " + std::to_string(d.fine_w) +
                      " is not divisible by bev_downsample " + std::to_string(ds));
  }
  if (d.fine_h % ds != 0) {
    throw ConfigError("y voxel count " + std::to_string(d.fine_h) +
                      " is not divisible by bev_downsample " + std::to_string(ds));
  }
  d.bev_w = d.fine_w / ds;
  d.bev_h = d.fine_h / ds;
  d.cell_x = cfg.vx * cfg.bev_downsample;
  d.cell_y = cfg.vy * cfg.bev_downsample;
  d.cell_z = cfg.z_range.span();
  return d;
}

}  // namespace occdistill::occupancy

#endif  // OCCDISTILL_OCCUPANCY_GRID_HPP
