#ifndef OCCDISTILL_DISTILL_LOSS_MAPS_HPP
#define OCCDISTILL_DISTILL_LOSS_MAPS_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "occdistill/error.hpp"
#include "occdistill/io/npy.hpp"

namespace occdistill::distill {

/// Probability clamp applied before every logarithm.
inline constexpr double kProbEps = 1e-7;

/// Per-element loss values laid out like DenseTensor: (W, H, C) row-major.
struct LossMap {
  std::size_t width = 0, height = 0, channels = 0;
  std::vector<double> values;

  LossMap() = default;
  LossMap(std::size_t w, std::size_t h, std::size_t c)
      : width(w), height(h), channels(c), values(w * h * c, 0.0) {}

  double at(std::size_t i, std::size_t j, std::size_t c) const {
    return values[(i * height + j) * channels + c];
  }
};

namespace detail {

inline void require_same_shape(const DenseTensor& s, const DenseTensor& t,
                               const char* what) {
  if (s.width() != t.width() || s.height() != t.height() ||
      s.channels() != t.channels()) {
    throw DimensionError(std::string(what) + ": student shape " + s.shape_string() +
                         " does not match teacher shape " + t.shape_string());
  }
}

template <typename Fn>
LossMap elementwise(const DenseTensor& s, const DenseTensor& t, const char* what, Fn fn) {
  require_same_shape(s, t, what);
  LossMap out(s.width(), s.height(), s.channels());
  const auto sd = s.data(), td = t.data();
  for (std::size_t n = 0; n < sd.size(); ++n) out.values[n] = fn(sd[n], td[n]);
  return out;
}

}  // namespace detail

/// (s - t)^2 per element.
inline LossMap mse_map(const DenseTensor& student, const DenseTensor& teacher) {
  return detail::elementwise(student, teacher, "feature maps", [](double s, double t) {
    return (s - t) * (s - t);
  });
}

/// Quality focal loss with the teacher score as soft target y and the student
/// score as prediction:  |y - s|^beta * BCE(s, y).
inline LossMap qfl_map(const DenseTensor& student_scores, const DenseTensor& teacher_scores,
                       double beta) {
  return detail::elementwise(
      student_scores, teacher_scores, "classification maps", [beta](double s, double y) {
        const double modulating = std::pow(std::abs(y - s), beta);
        const double p = std::clamp(s, kProbEps, 1.0 - kProbEps);
        const double bce = -((1.0 - y) * std::log(1.0 - p) + y * std::log(p));
        return modulating * bce;
      });
}

inline LossMap smooth_l1_map(const DenseTensor& student_reg, const DenseTensor& teacher_reg,
                             double beta) {
  if (!(beta > 0)) throw ConfigError("smooth-L1 beta must be positive");
  return detail::elementwise(student_reg, teacher_reg, "localisation maps",
                             [beta](double s, double t) {
                               const double d = std::abs(s - t);
                               return d < beta ? 0.5 * d * d / beta : d - 0.5 * beta;
                             });
}

/// Soft-target cross-entropy between two-bin direction logits. Channel layout
/// is (anchor, bin) with bins innermost; output has one channel per anchor.
inline LossMap ce_map(const DenseTensor& student_logits, const DenseTensor& teacher_logits) {
  detail::require_same_shape(student_logits, teacher_logits, "direction maps");
  if (student_logits.channels() % 2 != 0) {
    throw DimensionError("direction maps need 2 bins per anchor, got " +
                         std::to_string(student_logits.channels()) + " channels");
  }
  const std::size_t anchors = student_logits.channels() / 2;
  LossMap out(student_logits.width(), student_logits.height(), anchors);
  const auto sd = student_logits.data(), td = teacher_logits.data();
  auto softmax2 = [](double a, double b) {
    const double m = std::max(a, b);
    const double ea = std::exp(a - m), eb = std::exp(b - m);
    return std::pair{ea / (ea + eb), eb / (ea + eb)};
  };
  for (std::size_t n = 0; n < out.values.size(); ++n) {
    const auto [p0, p1] = softmax2(td[2 * n], td[2 * n + 1]);
    const auto [q0, q1] = softmax2(sd[2 * n], sd[2 * n + 1]);
    out.values[n] = -(p0 * std::log(std::max(q0, kProbEps)) +
                      p1 * std::log(std::max(q1, kProbEps)));
  }
  return out;
}

}  // namespace occdistill::distill

#endif  // OCCDISTILL_DISTILL_LOSS_MAPS_HPP
