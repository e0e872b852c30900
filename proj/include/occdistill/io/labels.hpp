#ifndef OCCDISTILL_IO_LABELS_HPP
#define OCCDISTILL_IO_LABELS_HPP

#include <array>
#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "occdistill/error.hpp"
#include "occdistill/io/file.hpp"
#include "occdistill/io/text.hpp"

namespace occdistill {

/// One line of a KITTI label file. Geometry is in the rectified camera frame,
/// `location` is the bottom-face center.
struct LabelRecord {
  std::string class_name;
  double truncation = 0.0;
  int occlusion = 0;
  double alpha = 0.0;
  std::array<double, 4> bbox{};      // left, top, right, bottom (pixels)
  std::array<double, 3> dims{};      // h, w, l
  std::array<double, 3> location{};  // x, y, z
  double ry = 0.0;
  std::optional<double> score;  // only set for pseudo-labels
  /// Original text of "DontCare" lines, written back unchanged.
  std::string verbatim;

  bool dont_care() const noexcept { return class_name == "DontCare"; }

  friend bool operator==(const LabelRecord&, const LabelRecord&) = default;
};

namespace io {

inline LabelRecord parse_label_line(std::string_view line, bool expect_score,
                                    const std::filesystem::path& origin,
                                    std::size_t line_no) {
  const std::string loc = "line " + std::to_string(line_no);
  const auto f = text::split_ws(line);
  const std::size_t want = expect_score ? 16 : 15;
  if (f.size() != want) {
    throw ParseError(origin, loc,
                     "expected " + std::to_string(want) + " fields, found " +
                         std::to_string(f.size()));
  }
  std::array<double, 15> v{};
  for (std::size_t i = 1; i < want; ++i) {
    const auto d = text::parse_double(f[i]);
    if (!d || !std::isfinite(*d)) {
      throw ParseError(origin, loc,
                       "field " + std::to_string(i + 1) + " is not a number: '" +
                           std::string(f[i]) + "'");
    }
    v[i - 1] = *d;
  }
  LabelRecord r;
  r.class_name = std::string(f[0]);
  r.truncation = v[0];
  if (v[1] != std::floor(v[1])) {
    throw ParseError(origin, loc, "occlusion must be an integer");
  }
  r.occlusion = static_cast<int>(v[1]);
  r.alpha = v[2];
  r.bbox = {v[3], v[4], v[5], v[6]};
  r.dims = {v[7], v[8], v[9]};
  r.location = {v[10], v[11], v[12]};
  r.ry = v[13];
  if (expect_score) r.score = v[14];
  if (r.dont_care()) {
    r.verbatim = std::string(line);
    while (!r.verbatim.empty() &&
           (r.verbatim.back() == '\r' || r.verbatim.back() == ' ')) {
      r.verbatim.pop_back();
    }
  } else if (!(r.dims[0] > 0 && r.dims[1] > 0 && r.dims[2] > 0)) {
    throw ParseError(origin, loc, "dimensions must be positive");
  }
  return r;
}

inline std::vector<LabelRecord> parse_labels(std::string_view content,
                                             bool expect_score,
                                             const std::filesystem::path& origin) {
  std::vector<LabelRecord> out;
  std::size_t line_no = 0;
  for (const auto line : text::split_lines(content)) {
    ++line_no;
    if (text::split_ws(line).empty()) continue;
    out.push_back(parse_label_line(line, expect_score, origin, line_no));
  }
  return out;
}

inline std::vector<LabelRecord> read_labels(const std::filesystem::path& path,
                                            bool expect_score) {
  return parse_labels(read_text(path), expect_score, path);
}

/// KITTI devkit formatting: 2 decimals for geometry, 4 for the score.
inline std::string format_label(const LabelRecord& r) {
  if (r.dont_care() && !r.verbatim.empty()) return r.verbatim;
  using text::fixed;
  std::string s = r.class_name + " " + fixed(r.truncation, 2) + " " +
                  std::to_string(r.occlusion) + " " + fixed(r.alpha, 2);
  for (double b : r.bbox) s += " " + fixed(b, 2);
  for (double d : r.dims) s += " " + fixed(d, 2);
  for (double l : r.location) s += " " + fixed(l, 2);
  s += " " + fixed(r.ry, 2);
  if (r.score) s += " " + fixed(*r.score, 4);
  return s;
}

inline std::string format_labels(const std::vector<LabelRecord>& records) {
  std::string out;
  for (const auto& r : records) out += format_label(r) + "\n";
  return out;
}

inline void write_labels(const std::vector<LabelRecord>& records,
                         const std::filesystem::path& path) {
  write_text(path, format_labels(records));
}

}  // namespace io
}  // namespace occdistill

#endif  // OCCDISTILL_IO_LABELS_HPP
