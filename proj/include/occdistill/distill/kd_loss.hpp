#ifndef OCCDISTILL_DISTILL_KD_LOSS_HPP
#define OCCDISTILL_DISTILL_KD_LOSS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "occdistill/distill/loss_maps.hpp"
#include "occdistill/error.hpp"
#include "occdistill/io/npy.hpp"
#include "occdistill/occupancy/mask.hpp"
#include "occdistill/occupancy/smoothing.hpp"

namespace occdistill::distill {

enum class Reduction {
  /// Squared Frobenius norm of the masked loss map.
  kLiteral,
  /// Masked sum divided by the broadcast mask mass.
  kMaskedMean,
};

inline Reduction parse_reduction(const std::string& name) {
  if (name == "literal") return Reduction::kLiteral;
  if (name == "masked_mean") return Reduction::kMaskedMean;
  throw ConfigError("unknown reduction '" + name + "' (expected literal or masked_mean)");
}

inline const char* reduction_name(Reduction r) {
  return r == Reduction::kLiteral ? "literal" : "masked_mean";
}

struct LossConfig {
  double qfl_beta = 2.0;
  double smooth_l1_beta = 1.0 / 9.0;
  double w_cls = 1.0, w_loc = 1.0, w_dir = 1.0;
  double lambda_feat = 1.0, lambda_resp = 1.0;
  Reduction reduction = Reduction::kLiteral;

  void validate() const {
    for (double w : {qfl_beta, w_cls, w_loc, w_dir, lambda_feat, lambda_resp}) {
      if (!(w >= 0) || !std::isfinite(w)) {
        throw ConfigError("loss weights and qfl_beta must be finite and non-negative");
      }
    }
    if (!(smooth_l1_beta > 0)) throw ConfigError("smooth_l1_beta must be positive");
  }
};

/// Broadcasts `mask` over the channel axis of `loss` and reduces to a scalar.
/// Summation runs in storage order so results are reproducible bit for bit.
inline double apply_mask_reduce(const LossMap& loss, const occupancy::OccupancyMask& mask,
                                Reduction mode) {
  if (mask.width() != loss.width || mask.height() != loss.height) {
    throw DimensionError("mask shape (" + std::to_string(mask.width()) + ", " +
                         std::to_string(mask.height()) + ") does not match loss map (" +
                         std::to_string(loss.width) + ", " + std::to_string(loss.height) +
                         ")");
  }
  double acc = 0.0, mass = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < loss.width; ++i) {
    for (std::size_t j = 0; j < loss.height; ++j) {
      const double m = mask(i, j);
      mass += m * static_cast<double>(loss.channels);
      for (std::size_t c = 0; c < loss.channels; ++c, ++n) {
        const double v = m * loss.values[n];
        acc += mode == Reduction::kLiteral ? v * v : v;
      }
    }
  }
  return mode == Reduction::kLiteral ? acc : acc / std::max(mass, kProbEps);
}

/// Occupancy-guided feature distillation: the smoothed mask applied to the
/// per-element MSE between student and teacher BEV features.
inline double feat_kd_loss(const DenseTensor& student, const DenseTensor& teacher,
                           const occupancy::OccupancyMask& binary_mask,
                           const occupancy::SmoothingConfig& smoothing, const LossConfig& cfg) {
  const auto loss = mse_map(student, teacher);
  return apply_mask_reduce(loss, occupancy::smooth_mask(binary_mask, smoothing), cfg.reduction);
}

/// Dense head outputs of one network on the BEV grid.
struct PredictionMaps {
  DenseTensor cls;  // (W, H, A*K), post-sigmoid scores
  DenseTensor loc;  // (W, H, A*R)
  DenseTensor dir;  // (W, H, A*2), logits

  std::size_t anchors() const { return dir.channels() / 2; }

  void validate(const char* who) const {
    const std::string name = who;
    for (const DenseTensor* t : {&cls, &loc, &dir}) {
      if (t->rank() != 3) {
        throw DimensionError(name + " prediction maps must be rank 3, got " + t->shape_string());
      }
    }
    if (cls.width() != loc.width() || cls.width() != dir.width() ||
        cls.height() != loc.height() || cls.height() != dir.height()) {
      throw DimensionError(name + " prediction maps disagree on the BEV grid: cls " +
                           cls.shape_string() + ", loc " + loc.shape_string() + ", dir " +
                           dir.shape_string());
    }
    const std::size_t a = anchors();
    if (dir.channels() % 2 != 0 || a == 0 || cls.channels() % a != 0 ||
        loc.channels() % a != 0) {
      throw DimensionError(name + " prediction maps disagree on anchor count: cls " +
                           cls.shape_string() + ", loc " + loc.shape_string() + ", dir " +
                           dir.shape_string());
    }
  }
};

struct RespKdResult {
  double cls = 0, loc = 0, dir = 0;
  double total = 0;
};

/// Occupancy-guided response distillation over the three heads, each reduced
/// with the same smoothed mask and combined with the head weights.
inline RespKdResult resp_kd_loss(const PredictionMaps& student, const PredictionMaps& teacher,
                                 const occupancy::OccupancyMask& binary_mask,
                                 const occupancy::SmoothingConfig& smoothing,
                                 const LossConfig& cfg) {
  student.validate("student");
  teacher.validate("teacher");
  const auto soft = occupancy::smooth_mask(binary_mask, smoothing);
  RespKdResult r;
  r.cls = apply_mask_reduce(qfl_map(student.cls, teacher.cls, cfg.qfl_beta), soft, cfg.reduction);
  r.loc = apply_mask_reduce(smooth_l1_map(student.loc, teacher.loc, cfg.smooth_l1_beta), soft,
                            cfg.reduction);
  r.dir = apply_mask_reduce(ce_map(student.dir, teacher.dir), soft, cfg.reduction);
  r.total = cfg.w_cls * r.cls + cfg.w_loc * r.loc + cfg.w_dir * r.dir;
  return r;
}

inline double total_kd_loss(double feat_loss, double resp_loss, const LossConfig& cfg) {
  return cfg.lambda_feat * feat_loss + cfg.lambda_resp * resp_loss;
}

}  // namespace occdistill::distill

#endif  // OCCDISTILL_DISTILL_KD_LOSS_HPP
