#ifndef OCCDISTILL_OCCUPANCY_SMOOTHING_HPP
#define OCCDISTILL_OCCUPANCY_SMOOTHING_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "occdistill/error.hpp"
#include "occdistill/io/file.hpp"
#include "occdistill/occupancy/mask.hpp"

namespace occdistill::occupancy {

/// Gaussian kernel parameters, sigma in grid cells. Default sigma follows
/// (kernel_size - 1) / 4.
struct SmoothingConfig {
  int kernel_size = 5;
  double sigma = 1.0;

  void validate() const {
    if (kernel_size < 1 || kernel_size % 2 == 0) {
      throw ConfigError("kernel_size must be a positive odd integer, got " +
                        std::to_string(kernel_size));
    }
    if (!(sigma > 0) || !std::isfinite(sigma)) {
      throw ConfigError("sigma must be finite and positive");
    }
  }
};

/// Normalised k x k weights, row-major, centred on index (k/2, k/2).
inline std::vector<double> gaussian_kernel(const SmoothingConfig& cfg) {
  cfg.validate();
  const int k = cfg.kernel_size, r = k / 2;
  std::vector<double> w(static_cast<std::size_t>(k * k));
  double total = 0;
  for (int di = -r; di <= r; ++di) {
    for (int dj = -r; dj <= r; ++dj) {
      const double v = std::exp(-(di * di + dj * dj) / (2 * cfg.sigma * cfg.sigma));
      w[static_cast<std::size_t>((di + r) * k + (dj + r))] = v;
      total += v;
    }
  }
  for (double& v : w) v /= total;
  return w;
}

/// Soft mask: zero-padded 2-D convolution of `mask` with the Gaussian kernel.
inline OccupancyMask smooth_mask(const OccupancyMask& mask, const SmoothingConfig& cfg) {
  const auto kernel = gaussian_kernel(cfg);
  const int k = cfg.kernel_size, r = k / 2;
  const auto W = static_cast<long>(mask.width()), H = static_cast<long>(mask.height());
  OccupancyMask out(mask.width(), mask.height());
  // Scatter from active cells; binary masks are sparse.
  std::vector<double> acc(mask.values().size(), 0.0);
  for (long i = 0; i < W; ++i) {
    for (long j = 0; j < H; ++j) {
      const double m = mask(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      if (m == 0.0) continue;
      for (int di = -r; di <= r; ++di) {
        const long ti = i + di;
        if (ti < 0 || ti >= W) continue;
        for (int dj = -r; dj <= r; ++dj) {
          const long tj = j + dj;
          if (tj < 0 || tj >= H) continue;
          acc[static_cast<std::size_t>(ti * H + tj)] +=
              m * kernel[static_cast<std::size_t>((di + r) * k + (dj + r))];
        }
      }
    }
  }
  for (std::size_t n = 0; n < acc.size(); ++n) {
    out.values()[n] = static_cast<float>(std::min(acc[n], 1.0));
  }
  return out;
}

/// 8-bit binary PGM, one row per forward index i, values scaled by 255.
inline void write_pgm(const OccupancyMask& mask, const std::filesystem::path& path) {
  std::string header = "P5\n" + std::to_string(mask.height()) + " " +
                       std::to_string(mask.width()) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  for (float v : mask.values()) {
    bytes.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.f, 1.f) * 255.f)));
  }
  io::write_bytes(path, bytes);
}

}  // namespace occdistill::occupancy

#endif  // OCCDISTILL_OCCUPANCY_SMOOTHING_HPP
