// Brute-force reference implementations used by the tests. Deliberately
// slow and written without reusing the library's algorithms.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <vector>

#include "occdistill/geometry/types.hpp"
#include "occdistill/io/npy.hpp"
#include "occdistill/io/point_cloud.hpp"
#include "occdistill/occupancy/grid.hpp"
#include "occdistill/occupancy/mask.hpp"

namespace oracle {

using namespace occdistill;

// --- bytes -----------------------------------------------------------------

inline void put_f32_le(std::vector<std::uint8_t>& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
}

// --- 2-D boxes -------------------------------------------------------------

/// Intersection area of two axis-aligned boxes by counting sub-pixel centres
/// on a `res`-per-unit lattice. Exact for boxes on the lattice.
inline double raster_intersection(const DepthedBox2D& a, const DepthedBox2D& b, int res = 4) {
  const double x0 = std::floor(std::min(a.x1, b.x1)), x1 = std::ceil(std::max(a.x2, b.x2));
  const double y0 = std::floor(std::min(a.y1, b.y1)), y1 = std::ceil(std::max(a.y2, b.y2));
  const double step = 1.0 / res;
  long count = 0;
  for (double x = x0 + step / 2; x < x1; x += step) {
    for (double y = y0 + step / 2; y < y1; y += step) {
      const bool in_a = x > a.x1 && x < a.x2 && y > a.y1 && y < a.y2;
      const bool in_b = x > b.x1 && x < b.x2 && y > b.y1 && y < b.y2;
      if (in_a && in_b) ++count;
    }
  }
  return static_cast<double>(count) * step * step;
}

inline double raster_iou(const DepthedBox2D& a, const DepthedBox2D& b, int res = 4) {
  const double inter = raster_intersection(a, b, res);
  return inter / (a.area() + b.area() - inter);
}

// --- rotated rectangles ------------------------------------------------------

inline bool inside_rect(const BevRect& r, double x, double y) {
  const double dx = x - r.cx, dy = y - r.cy;
  const double u = dx * std::cos(r.yaw) + dy * std::sin(r.yaw);
  const double v = -dx * std::sin(r.yaw) + dy * std::cos(r.yaw);
  return std::abs(u) <= r.l / 2 && std::abs(v) <= r.w / 2;
}

/// Intersection area by midpoint-rule integration over the joint bounding box.
inline double grid_intersection(const BevRect& a, const BevRect& b, int n = 800) {
  const double ra = std::hypot(a.l, a.w) / 2, rb = std::hypot(b.l, b.w) / 2;
  const double x0 = std::min(a.cx - ra, b.cx - rb), x1 = std::max(a.cx + ra, b.cx + rb);
  const double y0 = std::min(a.cy - ra, b.cy - rb), y1 = std::max(a.cy + ra, b.cy + rb);
  const double dx = (x1 - x0) / n, dy = (y1 - y0) / n;
  long hits = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double x = x0 + (i + 0.5) * dx, y = y0 + (j + 0.5) * dy;
      if (inside_rect(a, x, y) && inside_rect(b, x, y)) ++hits;
    }
  }
  return static_cast<double>(hits) * dx * dy;
}

// --- occupancy -------------------------------------------------------------

/// Fills the full fine voxel grid (one 64-bit word of height bits per column),
/// then OR-collapses each downsample x downsample x D block into a BEV cell.
inline occupancy::OccupancyMask fine_grid_mask(std::span<const LidarPoint> pts,
                                               const occupancy::GridConfig& g) {
  const auto W = static_cast<std::size_t>(std::llround(g.x_range.span() / g.vx));
  const auto H = static_cast<std::size_t>(std::llround(g.y_range.span() / g.vy));
  const auto D = static_cast<std::size_t>(std::llround(g.z_range.span() / g.vz));
  std::vector<std::uint64_t> columns(W * H, 0);
  for (const auto& p : pts) {
    const double x = p.x, y = p.y, z = p.z;
    if (x < g.x_range.min || x >= g.x_range.max) continue;
    if (y < g.y_range.min || y >= g.y_range.max) continue;
    if (z < g.z_range.min || z >= g.z_range.max) continue;
    auto i = static_cast<std::size_t>((x - g.x_range.min) / g.vx);
    auto j = static_cast<std::size_t>((y - g.y_range.min) / g.vy);
    auto k = static_cast<std::size_t>((z - g.z_range.min) / g.vz);
    i = std::min(i, W - 1), j = std::min(j, H - 1), k = std::min(k, D - 1);
    columns[i * H + j] |= std::uint64_t{1} << (k % 64);
  }
  const auto s = static_cast<std::size_t>(g.bev_downsample);
  occupancy::OccupancyMask m(W / s, H / s);
  for (std::size_t bi = 0; bi < W / s; ++bi) {
    for (std::size_t bj = 0; bj < H / s; ++bj) {
      std::uint64_t any = 0;
      for (std::size_t i = bi * s; i < (bi + 1) * s; ++i) {
        for (std::size_t j = bj * s; j < (bj + 1) * s; ++j) any |= columns[i * H + j];
      }
      m(bi, bj) = any ? 1.f : 0.f;
    }
  }
  return m;
}

// --- smoothing -------------------------------------------------------------

inline double gauss_weight(int di, int dj, int k, double sigma) {
  double total = 0;
  for (int a = -k / 2; a <= k / 2; ++a) {
    for (int b = -k / 2; b <= k / 2; ++b) total += std::exp(-(a * a + b * b) / (2 * sigma * sigma));
  }
  return std::exp(-(di * di + dj * dj) / (2 * sigma * sigma)) / total;
}

/// Gather-form zero-padded convolution, O(W*H*k^2), double precision.
inline std::vector<double> naive_smooth(const occupancy::OccupancyMask& m, int k, double sigma) {
  const long W = static_cast<long>(m.width()), H = static_cast<long>(m.height());
  std::vector<double> out(static_cast<std::size_t>(W * H));
  for (long i = 0; i < W; ++i) {
    for (long j = 0; j < H; ++j) {
      double acc = 0;
      for (int di = -k / 2; di <= k / 2; ++di) {
        for (int dj = -k / 2; dj <= k / 2; ++dj) {
          const long si = i - di, sj = j - dj;
          if (si < 0 || sj < 0 || si >= W || sj >= H) continue;
          acc += gauss_weight(di, dj, k, sigma) * m(static_cast<std::size_t>(si), static_cast<std::size_t>(sj));
        }
      }
      out[static_cast<std::size_t>(i * H + j)] = std::min(acc, 1.0);
    }
  }
  return out;
}

// --- losses ----------------------------------------------------------------

inline double qfl(double y, double sigma, double beta) {
  const double s = std::clamp(sigma, 1e-7, 1 - 1e-7);
  return std::pow(std::abs(y - s), beta) * -((1 - y) * std::log(1 - s) + y * std::log(s));
}

inline double smooth_l1(double d, double beta) {
  d = std::abs(d);
  return d < beta ? 0.5 * d * d / beta : d - 0.5 * beta;
}

inline double ce(double s0, double s1, double t0, double t1) {
  const double p0 = 1 / (1 + std::exp(t1 - t0)), p1 = 1 - p0;
  const double q0 = std::max(1 / (1 + std::exp(s1 - s0)), 1e-7);
  const double q1 = std::max(1 / (1 + std::exp(s0 - s1)), 1e-7);
  return -(p0 * std::log(q0) + p1 * std::log(q1));
}

/// Literal squared-norm reduction of mask(i,j) * f(i,j,c) over a tensor grid.
template <typename F>
double literal(const std::vector<double>& soft, std::size_t W, std::size_t H, std::size_t C, F f) {
  double acc = 0;
  for (std::size_t i = 0; i < W; ++i) {
    for (std::size_t j = 0; j < H; ++j) {
      for (std::size_t c = 0; c < C; ++c) {
        const double v = soft[i * H + j] * f(i, j, c);
        acc += v * v;
      }
    }
  }
  return acc;
}

}  // namespace oracle
