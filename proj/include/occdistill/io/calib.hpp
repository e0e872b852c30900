#ifndef OCCDISTILL_IO_CALIB_HPP
#define OCCDISTILL_IO_CALIB_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <map>
#include <string>

#include "occdistill/error.hpp"
#include "occdistill/io/file.hpp"
#include "occdistill/io/text.hpp"

namespace occdistill {

/// KITTI object-benchmark calibration, all matrices row-major.
struct CalibMatrices {
  std::array<double, 12> p2{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0};
  std::array<double, 9> r0{1, 0, 0, 0, 1, 0, 0, 0, 1};
  std::array<double, 12> tr_velo_to_cam{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0};

  friend bool operator==(const CalibMatrices&, const CalibMatrices&) = default;
};

namespace io {

namespace detail {

inline void validate_calib(const CalibMatrices& c,
                           const std::filesystem::path& origin) {
  double worst = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double dot = 0.0;
      for (int k = 0; k < 3; ++k) dot += c.r0[i * 3 + k] * c.r0[j * 3 + k];
      worst = std::max(worst, std::abs(dot - (i == j ? 1.0 : 0.0)));
    }
  }
  if (!(worst <= 1e-3)) {
    throw ParseError(origin, "R0_rect",
                     "rectification matrix is not orthonormal (deviation " +
                         text::shortest(worst) + ")");
  }
  if (!(std::abs(c.p2[10] - 1.0) <= 1e-6)) {
    throw ParseError(origin, "P2", "P2[2][2] must be 1, got " +
                                       text::shortest(c.p2[10]));
  }
}

}  // namespace detail

inline CalibMatrices parse_calib(std::string_view content,
                                 const std::filesystem::path& origin) {
  CalibMatrices calib;
  bool have_p2 = false, have_r0 = false, have_tr = false;
  std::size_t line_no = 0;
  for (const auto line : text::split_lines(content)) {
    ++line_no;
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) continue;
    const auto key = text::split_ws(line.substr(0, colon));
    if (key.size() != 1) continue;

    std::size_t expected = 0;
    double* dst = nullptr;
    if (key[0] == "P2") {
      expected = 12, dst = calib.p2.data(), have_p2 = true;
    } else if (key[0] == "R0_rect") {
      expected = 9, dst = calib.r0.data(), have_r0 = true;
    } else if (key[0] == "Tr_velo_to_cam") {
      expected = 12, dst = calib.tr_velo_to_cam.data(), have_tr = true;
    } else {
      continue;
    }
    const auto tokens = text::split_ws(line.substr(colon + 1));
    const std::string loc = "line " + std::to_string(line_no);
    if (tokens.size() != expected) {
      throw ParseError(origin, loc,
                       std::string(key[0]) + " expects " + std::to_string(expected) +
                           " values, found " + std::to_string(tokens.size()));
    }
    for (std::size_t i = 0; i < expected; ++i) {
      const auto v = text::parse_double(tokens[i]);
      if (!v) {
        throw ParseError(origin, loc,
                         "non-numeric value '" + std::string(tokens[i]) + "'");
      }
      dst[i] = *v;
    }
  }
  if (!have_p2) throw ParseError(origin, "", "missing key P2");
  if (!have_r0) throw ParseError(origin, "", "missing key R0_rect");
  if (!have_tr) throw ParseError(origin, "", "missing key Tr_velo_to_cam");
  detail::validate_calib(calib, origin);
  return calib;
}

inline CalibMatrices read_calib(const std::filesystem::path& path) {
  return parse_calib(read_text(path), path);
}

/// Writes the three keys the reader needs, at full double precision.
inline void write_calib(const CalibMatrices& calib,
                        const std::filesystem::path& path) {
  auto row = [](const char* key, const double* v, std::size_t n) {
    std::string s = key;
    for (std::size_t i = 0; i < n; ++i) s += " " + text::shortest(v[i]);
    return s + "\n";
  };
  write_text(path, row("P2:", calib.p2.data(), 12) +
                       row("R0_rect:", calib.r0.data(), 9) +
                       row("Tr_velo_to_cam:", calib.tr_velo_to_cam.data(), 12));
}

}  // namespace io
}  // namespace occdistill

#endif  // OCCDISTILL_IO_CALIB_HPP
