#ifndef OCCDISTILL_CLI_CONFIG_HPP
#define OCCDISTILL_CLI_CONFIG_HPP

#include <filesystem>
#include <set>
#include <string>
#include <toml++/toml.hpp>

#include "occdistill/cmaug/augment.hpp"
#include "occdistill/distill/kd_loss.hpp"
#include "occdistill/error.hpp"
#include "occdistill/occupancy/grid.hpp"
#include "occdistill/occupancy/smoothing.hpp"

namespace occdistill::cli {

struct RunConfig {
  occupancy::GridConfig grid;
  occupancy::SmoothingConfig smoothing;
  distill::LossConfig loss;
  cmaug::AugConfig aug;
  std::filesystem::path dataset_root;
  std::filesystem::path split;
  std::filesystem::path output_root = "out";
  std::filesystem::path database;
  std::filesystem::path pseudo_labels;
  std::size_t workers = 1;
  bool emit_pseudo_labels = false;

  void validate() const {
    occupancy::derive_bev_dims(grid);
    smoothing.validate();
    loss.validate();
    aug.validate();
    if (workers == 0) throw ConfigError("workers must be at least 1");
  }
};

namespace detail {

inline void reject_unknown(const toml::table& t, const std::set<std::string>& known,
                           const std::string& section) {
  for (const auto& [k, _] : t) {
    if (!known.contains(std::string(k.str()))) {
      throw ConfigError("unknown key '" + std::string(k.str()) + "' in " + section);
    }
  }
}

template <typename T>
void read_number(const toml::table& t, const char* key, T& dst, const std::string& section) {
  const auto* node = t.get(key);
  if (!node) return;
  if (auto v = node->value<double>()) {
    if constexpr (std::is_integral_v<T>) {
      if (*v < 0 || *v != std::floor(*v)) {
        throw ConfigError(section + "." + key + " must be a non-negative integer");
      }
    }
    dst = static_cast<T>(*v);
    return;
  }
  throw ConfigError(section + "." + key + " must be a number");
}

template <std::size_t N>
std::array<double, N> read_array(const toml::table& t, const char* key, const std::string& section,
                                 std::array<double, N> fallback) {
  const auto* node = t.get(key);
  if (!node) return fallback;
  const auto* arr = node->as_array();
  if (!arr || arr->size() != N) {
    throw ConfigError(section + "." + key + " must be an array of " + std::to_string(N) + " numbers");
  }
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    const auto v = (*arr)[i].value<double>();
    if (!v) throw ConfigError(section + "." + key + " must contain numbers");
    out[i] = *v;
  }
  return out;
}

inline std::filesystem::path read_path(const toml::table& t, const char* key,
                                       const std::filesystem::path& base,
                                       std::filesystem::path fallback) {
  const auto* node = t.get(key);
  if (!node) return fallback;
  const auto s = node->value<std::string>();
  if (!s) throw ConfigError(std::string(key) + " must be a string");
  std::filesystem::path p(*s);
  return p.is_relative() ? base / p : p;
}

inline const toml::table* section(const toml::table& root, const char* name) {
  const auto* node = root.get(name);
  if (!node) return nullptr;
  const auto* t = node->as_table();
  if (!t) throw ConfigError(std::string("[") + name + "] must be a table");
  return t;
}

}  // namespace detail

/// Parses a run configuration. Relative paths are resolved against `base`.
inline RunConfig parse_run_config(std::string_view toml_text, const std::filesystem::path& base) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    throw ConfigError(std::string("invalid TOML: ") + std::string(e.description()));
  }
  using namespace detail;
  reject_unknown(root,
                 {"dataset_root", "split", "output_root", "database", "pseudo_labels", "workers",
                  "emit_pseudo_labels", "grid", "smoothing", "loss", "aug"},
                 "top level");
  RunConfig cfg;
  cfg.dataset_root = read_path(root, "dataset_root", base, cfg.dataset_root);
  cfg.split = read_path(root, "split", base, cfg.split);
  cfg.output_root = read_path(root, "output_root", base, cfg.output_root);
  cfg.database = read_path(root, "database", base, cfg.database);
  cfg.pseudo_labels = read_path(root, "pseudo_labels", base, cfg.pseudo_labels);
  read_number(root, "workers", cfg.workers, "top level");
  if (const auto* n = root.get("emit_pseudo_labels")) {
    const auto v = n->value<bool>();
    if (!v) throw ConfigError("emit_pseudo_labels must be a boolean");
    cfg.emit_pseudo_labels = *v;
  }

  if (const auto* g = section(root, "grid")) {
    reject_unknown(*g, {"x_range", "y_range", "z_range", "voxel", "bev_downsample"}, "[grid]");
    auto& grid = cfg.grid;
    const auto x = read_array<2>(*g, "x_range", "grid", {grid.x_range.min, grid.x_range.max});
    const auto y = read_array<2>(*g, "y_range", "grid", {grid.y_range.min, grid.y_range.max});
    const auto z = read_array<2>(*g, "z_range", "grid", {grid.z_range.min, grid.z_range.max});
    const auto v = read_array<3>(*g, "voxel", "grid", {grid.vx, grid.vy, grid.vz});
    grid.x_range = {x[0], x[1]};
    grid.y_range = {y[0], y[1]};
    grid.z_range = {z[0], z[1]};
    grid.vx = v[0], grid.vy = v[1], grid.vz = v[2];
    read_number(*g, "bev_downsample", grid.bev_downsample, "grid");
  }
  if (const auto* s = section(root, "smoothing")) {
    reject_unknown(*s, {"kernel_size", "sigma"}, "[smoothing]");
    read_number(*s, "kernel_size", cfg.smoothing.kernel_size, "smoothing");
    read_number(*s, "sigma", cfg.smoothing.sigma, "smoothing");
  }
  if (const auto* l = section(root, "loss")) {
    reject_unknown(*l, {"qfl_beta", "smooth_l1_beta", "head_weights", "top_weights", "reduction"},
                   "[loss]");
    auto& loss = cfg.loss;
    read_number(*l, "qfl_beta", loss.qfl_beta, "loss");
    read_number(*l, "smooth_l1_beta", loss.smooth_l1_beta, "loss");
    const auto hw = read_array<3>(*l, "head_weights", "loss", {loss.w_cls, loss.w_loc, loss.w_dir});
    const auto tw = read_array<2>(*l, "top_weights", "loss", {loss.lambda_feat, loss.lambda_resp});
    loss.w_cls = hw[0], loss.w_loc = hw[1], loss.w_dir = hw[2];
    loss.lambda_feat = tw[0], loss.lambda_resp = tw[1];
    if (const auto* r = l->get("reduction")) {
      const auto name = r->value<std::string>();
      if (!name) throw ConfigError("loss.reduction must be a string");
      loss.reduction = distill::parse_reduction(*name);
    }
  }
  if (const auto* a = section(root, "aug")) {
    reject_unknown(*a,
                   {"samples_per_class", "oais_threshold", "bev_iou_threshold", "min_patch_px",
                    "min_points", "pseudo_score_min", "remove_swallowed_points", "seed"},
                   "[aug]");
    auto& aug = cfg.aug;
    if (const auto* spc = section(*a, "samples_per_class")) {
      aug.samples_per_class.clear();
      for (const auto& [cls, node] : *spc) {
        const auto v = node.value<double>();
        if (!v || *v < 0 || *v != std::floor(*v)) {
          throw ConfigError("aug.samples_per_class." + std::string(cls.str()) +
                            " must be a non-negative integer");
        }
        aug.samples_per_class[std::string(cls.str())] = static_cast<std::size_t>(*v);
      }
    }
    read_number(*a, "oais_threshold", aug.oais_threshold, "aug");
    read_number(*a, "bev_iou_threshold", aug.bev_iou_threshold, "aug");
    const auto mp = read_array<2>(*a, "min_patch_px", "aug", {aug.min_patch_w, aug.min_patch_h});
    aug.min_patch_w = mp[0], aug.min_patch_h = mp[1];
    read_number(*a, "min_points", aug.min_points, "aug");
    read_number(*a, "pseudo_score_min", aug.pseudo_score_min, "aug");
    if (const auto* n = a->get("remove_swallowed_points")) {
      const auto v = n->value<bool>();
      if (!v) throw ConfigError("aug.remove_swallowed_points must be a boolean");
      aug.remove_swallowed_points = *v;
    }
    if (const auto* n = a->get("seed")) {
      const auto v = n->value<std::int64_t>();
      if (!v || *v < 0) throw ConfigError("aug.seed must be a non-negative integer");
      aug.seed = static_cast<std::uint64_t>(*v);
    }
  }
  cfg.validate();
  return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(io::read_text(path), path.parent_path());
}

}  // namespace occdistill::cli

#endif  // OCCDISTILL_CLI_CONFIG_HPP
