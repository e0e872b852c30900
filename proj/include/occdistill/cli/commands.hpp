#ifndef OCCDISTILL_CLI_COMMANDS_HPP
#define OCCDISTILL_CLI_COMMANDS_HPP

#include <atomic>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "occdistill/cli/config.hpp"
#include "occdistill/cmaug/audit.hpp"
#include "occdistill/cmaug/augment.hpp"
#include "occdistill/cmaug/collision_stats.hpp"
#include "occdistill/cmaug/database_builder.hpp"
#include "occdistill/distill/kd_loss.hpp"
#include "occdistill/io/calib.hpp"
#include "occdistill/io/database.hpp"
#include "occdistill/io/image.hpp"
#include "occdistill/io/labels.hpp"
#include "occdistill/io/npy.hpp"
#include "occdistill/io/point_cloud.hpp"
#include "occdistill/occupancy/mask.hpp"
#include "occdistill/occupancy/smoothing.hpp"

namespace occdistill::cli {

namespace fs = std::filesystem;

/// Runs fn(0..n-1) on up to `workers` threads. Each index is processed by
/// exactly one worker; callers write results into per-index slots.
inline void parallel_for(std::size_t n, std::size_t workers,
                         const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
}

/// KITTI object layout under `root`.
struct DatasetLayout {
  fs::path root;
  fs::path cloud(const std::string& id) const { return root / "velodyne" / (id + ".bin"); }
  fs::path image(const std::string& id) const { return root / "image_2" / (id + ".png"); }
  fs::path calib(const std::string& id) const { return root / "calib" / (id + ".txt"); }
  fs::path labels(const std::string& id) const { return root / "label_2" / (id + ".txt"); }
};

inline std::vector<std::string> read_split(const fs::path& path) {
  if (path.empty()) throw ConfigError("no split file configured");
  std::vector<std::string> ids;
  const std::string text = io::read_text(path);
  for (auto line : io::text::split_lines(text)) {
    const auto tok = io::text::split_ws(line);
    if (tok.size() > 1) throw ParseError(path, "", "split lines hold one scene id each");
    if (!tok.empty()) ids.emplace_back(tok[0]);
  }
  return ids;
}

/// Canonical JSON text: sorted keys, two-space indent, trailing newline.
inline std::string canonical(const nlohmann::json& j) { return j.dump(2) + "\n"; }

inline cmaug::Scene load_labelled_scene(const DatasetLayout& ds, const std::string& id) {
  cmaug::Scene s;
  s.id = id;
  s.calib = io::read_calib(ds.calib(id));
  s.cloud = io::read_point_cloud(ds.cloud(id));
  s.image = io::read_image(ds.image(id));
  s.labels = io::read_labels(ds.labels(id), false);
  return s;
}

// ---------------------------------------------------------------------------
// build-db

inline int cmd_build_db(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log,
                        std::ostream& err) {
  const DatasetLayout ds{cfg.dataset_root};
  const auto ids = read_split(cfg.split);
  std::vector<std::vector<ObjectSample>> per_scene(ids.size());
  std::vector<std::string> errors(ids.size());
  parallel_for(ids.size(), cfg.workers, [&](std::size_t i) {
    try {
      per_scene[i] = cmaug::extract_objects(load_labelled_scene(ds, ids[i]), cfg.aug.min_points);
    } catch (const std::exception& e) {
      errors[i] = "scene " + ids[i] + ": " + e.what();
    }
  });
  bool failed = false;
  for (const auto& e : errors) {
    if (!e.empty()) err << e << "\n", failed = true;
  }
  if (failed) return 1;

  GtDatabase db;
  for (auto& objs : per_scene) cmaug::add_to_database(db, std::move(objs));
  io::save_database(db, out_dir);
  for (const auto& [cls, samples] : db.entries) {
    double pts = 0;
    for (const auto& s : samples) pts += static_cast<double>(s.num_points());
    std::ostringstream line;
    line << cls << ": " << samples.size() << " objects, mean " << std::fixed << std::setprecision(1)
         << (samples.empty() ? 0.0 : pts / static_cast<double>(samples.size())) << " points";
    log << line.str() << "\n";
  }
  log << "database: " << db.size() << " objects -> " << out_dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// pseudo-ingest

/// Filters raw detections in `predictions/<id>.txt` by score and writes the
/// survivors to `out_dir/<id>.txt`.
inline int cmd_pseudo_ingest(const RunConfig& cfg, const fs::path& predictions,
                             const fs::path& out_dir, std::ostream& log, std::ostream& err) {
  const auto ids = read_split(cfg.split);
  std::vector<std::vector<LabelRecord>> kept(ids.size());
  std::vector<std::string> errors(ids.size());
  parallel_for(ids.size(), cfg.workers, [&](std::size_t i) {
    try {
      kept[i] = cmaug::ingest_pseudo_label_file(predictions / (ids[i] + ".txt"),
                                                cfg.aug.pseudo_score_min);
    } catch (const std::exception& e) {
      errors[i] = "scene " + ids[i] + ": " + e.what();
    }
  });
  bool failed = false;
  for (const auto& e : errors) {
    if (!e.empty()) err << e << "\n", failed = true;
  }
  if (failed) return 1;
  fs::create_directories(out_dir);
  std::size_t total = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    io::write_labels(kept[i], out_dir / (ids[i] + ".txt"));
    total += kept[i].size();
  }
  log << "pseudo-labels: kept " << total << " detections over " << ids.size() << " scenes\n";
  return 0;
}

// ---------------------------------------------------------------------------
// augment

inline nlohmann::json provenance_json(const std::string& id, const cmaug::AugmentResult& r,
                                      const cmaug::AugConfig& cfg) {
  auto box_json = [](const DepthedBox2D& b) {
    return nlohmann::json::array({b.x1, b.y1, b.x2, b.y2});
  };
  nlohmann::json pasted = nlohmann::json::array();
  for (const auto& p : r.scene.provenance) {
    pasted.push_back({{"source", p.source_scene},
                      {"label_index", p.label_index},
                      {"class", p.class_name},
                      {"depth", p.depth},
                      {"paste_order", p.paste_order},
                      {"patch_box", box_json(p.patch_box)}});
  }
  nlohmann::json rejected = nlohmann::json::array();
  for (const auto& rej : r.rejected) {
    const auto& d = r.drawn[rej.candidate];
    rejected.push_back({{"source", d.sample->source_scene},
                        {"label_index", d.sample->label_index},
                        {"class", d.class_name},
                        {"reason", rej.reason},
                        {"against", rej.against},
                        {"score", rej.score}});
  }
  return {{"scene", id},
          {"seed", cfg.seed},
          {"drawn", r.drawn.size()},
          {"pasted", pasted},
          {"rejected", rejected}};
}

struct AugmentInputs {
  cmaug::SceneInputs scene;
  std::vector<std::uint8_t> cloud_bytes, image_bytes, label_bytes;
};

inline AugmentInputs load_augment_inputs(const RunConfig& cfg, const std::string& id) {
  const DatasetLayout ds{cfg.dataset_root};
  AugmentInputs in;
  in.scene.id = id;
  in.scene.calib = io::read_calib(ds.calib(id));
  in.cloud_bytes = io::read_bytes(ds.cloud(id));
  in.scene.cloud = io::decode_point_cloud(in.cloud_bytes, ds.cloud(id));
  in.image_bytes = io::read_bytes(ds.image(id));
  in.scene.image = io::decode_png(in.image_bytes, ds.image(id));
  if (fs::exists(ds.labels(id))) {
    in.label_bytes = io::read_bytes(ds.labels(id));
    in.scene.labels = io::parse_labels(
        std::string_view(reinterpret_cast<const char*>(in.label_bytes.data()), in.label_bytes.size()),
        false, ds.labels(id));
    in.scene.collision_labels = in.scene.labels;
  } else {
    if (cfg.pseudo_labels.empty()) {
      throw IoError("scene " + id + " has no label file and no pseudo-label directory is configured");
    }
    const auto pseudo = cmaug::ingest_pseudo_label_file(cfg.pseudo_labels / (id + ".txt"),
                                                        cfg.aug.pseudo_score_min);
    in.scene.collision_labels = pseudo;
    if (cfg.emit_pseudo_labels) in.scene.labels = pseudo;
    in.label_bytes = [&] {
      const auto text = io::format_labels(in.scene.labels);
      return std::vector<std::uint8_t>(text.begin(), text.end());
    }();
  }
  return in;
}

/// Writes `<out>/<id>/{cloud.bin,image.png,labels.txt,provenance.json}`.
/// Outputs of a scene with nothing pasted are the input bytes unchanged.
inline void write_augmented(const fs::path& dir, const AugmentInputs& in,
                            const cmaug::AugmentResult& r, const cmaug::AugConfig& cfg) {
  fs::create_directories(dir);
  const bool untouched = r.kept.empty();
  if (untouched) {
    io::write_bytes(dir / "cloud.bin", in.cloud_bytes);
    io::write_bytes(dir / "image.png", in.image_bytes);
    io::write_bytes(dir / "labels.txt", in.label_bytes);
  } else {
    io::write_point_cloud(r.scene.cloud, dir / "cloud.bin");
    io::write_image(r.scene.image, dir / "image.png");
    io::write_labels(r.scene.labels, dir / "labels.txt");
  }
  io::write_text(dir / "provenance.json", canonical(provenance_json(in.scene.id, r, cfg)));
}

inline int cmd_augment(const RunConfig& cfg, std::ostream& log, std::ostream& err) {
  if (cfg.database.empty()) throw ConfigError("no database directory configured");
  const auto db = io::load_database(cfg.database);
  const auto ids = read_split(cfg.split);
  std::vector<std::string> errors(ids.size());
  std::vector<std::size_t> pasted(ids.size(), 0);
  parallel_for(ids.size(), cfg.workers, [&](std::size_t i) {
    const fs::path dir = cfg.output_root / ids[i];
    try {
      const auto in = load_augment_inputs(cfg, ids[i]);
      const auto result = cmaug::augment(in.scene, db, cfg.aug);
      const auto audit = cmaug::audit_augmentation(in.scene, result, cfg.aug);
      if (!audit.ok()) {
        std::string msg = "audit failed:";
        for (const auto& v : audit.violations) msg += " [" + v + "]";
        throw ConsistencyError(msg);
      }
      write_augmented(dir, in, result, cfg.aug);
      pasted[i] = result.kept.size();
    } catch (const std::exception& e) {
      errors[i] = "scene " + ids[i] + ": " + e.what();
      std::error_code ec;
      fs::remove_all(dir, ec);
    }
  });
  bool failed = false;
  std::size_t total = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!errors[i].empty()) err << errors[i] << "\n", failed = true;
    total += pasted[i];
  }
  log << "augment: pasted " << total << " objects into " << ids.size() << " scenes\n";
  return failed ? 1 : 0;
}

// ---------------------------------------------------------------------------
// occupancy

inline int cmd_occupancy(const RunConfig& cfg, const fs::path& cloud_path, const fs::path& out_npy,
                         bool smooth, const std::optional<fs::path>& pgm, std::ostream& log) {
  const auto dims = occupancy::derive_bev_dims(cfg.grid);
  const auto cloud = io::read_point_cloud(cloud_path);
  auto mask = occupancy::build_occupancy_mask(cloud, cfg.grid);
  const auto active = static_cast<std::size_t>(mask.sum());
  if (smooth) mask = occupancy::smooth_mask(mask, cfg.smoothing);
  if (out_npy.has_parent_path()) fs::create_directories(out_npy.parent_path());
  io::write_tensor(mask.to_tensor(), out_npy);
  if (pgm) occupancy::write_pgm(mask, *pgm);
  log << "occupancy: (" << dims.bev_w << ", " << dims.bev_h << ") mask, " << active
      << " active cells -> " << out_npy.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// distill-loss

struct LossRecord {
  double feat_kd = 0, cls_kd = 0, loc_kd = 0, dir_kd = 0, resp_kd = 0, total = 0;

  nlohmann::json to_json() const {
    return {{"feat_kd", feat_kd}, {"cls_kd", cls_kd}, {"loc_kd", loc_kd},
            {"dir_kd", dir_kd},   {"resp_kd", resp_kd}, {"total", total}};
  }
};

/// Loads `feat.npy`, `cls.npy`, `loc.npy` and `dir.npy` from the student and
/// teacher directories and evaluates every distillation term.
inline LossRecord evaluate_losses(const RunConfig& cfg, const fs::path& student_dir,
                                  const fs::path& teacher_dir, const fs::path& mask_path) {
  auto load = [](const fs::path& dir, const char* name) { return io::read_tensor(dir / name); };
  const auto s_feat = load(student_dir, "feat.npy"), t_feat = load(teacher_dir, "feat.npy");
  const distill::PredictionMaps s{load(student_dir, "cls.npy"), load(student_dir, "loc.npy"),
                                  load(student_dir, "dir.npy")};
  const distill::PredictionMaps t{load(teacher_dir, "cls.npy"), load(teacher_dir, "loc.npy"),
                                  load(teacher_dir, "dir.npy")};
  const auto mask = occupancy::OccupancyMask::from_tensor(io::read_tensor(mask_path));
  if (!mask.is_binary()) throw DimensionError("occupancy mask " + mask_path.string() + " is not binary");

  auto check = [&](const DenseTensor& a, const DenseTensor& b, const std::string& what) {
    if (a.shape() != b.shape()) {
      throw DimensionError(what + ": student " + a.shape_string() + " vs teacher " + b.shape_string());
    }
  };
  check(s_feat, t_feat, "feat.npy");
  check(s.cls, t.cls, "cls.npy");
  check(s.loc, t.loc, "loc.npy");
  check(s.dir, t.dir, "dir.npy");
  auto check_grid = [&](const DenseTensor& a, const char* what) {
    if (a.width() != mask.width() || a.height() != mask.height()) {
      throw DimensionError(std::string(what) + " " + a.shape_string() + " vs mask (" +
                           std::to_string(mask.width()) + ", " + std::to_string(mask.height()) + ")");
    }
  };
  check_grid(s_feat, "feat.npy");
  check_grid(s.cls, "cls.npy");

  LossRecord rec;
  rec.feat_kd = distill::feat_kd_loss(s_feat, t_feat, mask, cfg.smoothing, cfg.loss);
  const auto resp = distill::resp_kd_loss(s, t, mask, cfg.smoothing, cfg.loss);
  rec.cls_kd = resp.cls;
  rec.loc_kd = resp.loc;
  rec.dir_kd = resp.dir;
  rec.resp_kd = resp.total;
  rec.total = distill::total_kd_loss(rec.feat_kd, rec.resp_kd, cfg.loss);
  return rec;
}

inline int cmd_distill_loss(const RunConfig& cfg, const fs::path& student_dir,
                            const fs::path& teacher_dir, const fs::path& mask_path,
                            const std::optional<fs::path>& out_json, std::ostream& log) {
  const auto rec = evaluate_losses(cfg, student_dir, teacher_dir, mask_path);
  const auto text = canonical(rec.to_json());
  if (out_json) {
    if (out_json->has_parent_path()) fs::create_directories(out_json->parent_path());
    io::write_text(*out_json, text);
  }
  log << text;
  return 0;
}

// ---------------------------------------------------------------------------
// collision-stats

struct StatsRequest {
  cmaug::PvCriterion criterion = cmaug::PvCriterion::kOais;
  double threshold = 0.5;
  std::size_t trials = 1;
  bool synthetic = false;
};

inline nlohmann::json stats_json(const cmaug::CollisionStats& s) {
  return {{"trials", s.trials},
          {"drawn", s.drawn},
          {"kept", s.kept},
          {"admitted_pairs", s.admitted_pairs},
          {"scored_pairs", s.scored_pairs},
          {"severe_admitted", s.severe_admitted},
          {"mean_pair_score", s.mean_pair_score()},
          {"rejections", s.rejections}};
}

struct StatsReport {
  std::vector<std::pair<std::string, cmaug::CollisionStats>> scenes;
  cmaug::CollisionStats aggregate;
};

inline StatsReport collect_collision_stats(const RunConfig& cfg, const StatsRequest& req) {
  auto aug = cfg.aug;
  aug.oais_threshold = req.threshold;
  StatsReport report;
  if (req.trials == 0) return report;

  if (req.synthetic) {
    std::vector<cmaug::CollisionStats> per_trial(req.trials);
    parallel_for(req.trials, cfg.workers, [&](std::size_t t) {
      per_trial[t] = cmaug::synthetic_trial(aug.seed, t, aug, req.criterion);
    });
    cmaug::CollisionStats s;
    for (const auto& t : per_trial) s.merge(t);
    report.scenes.emplace_back("synthetic", s);
  } else {
    if (cfg.database.empty()) throw ConfigError("no database directory configured");
    const auto db = io::load_database(cfg.database);
    const auto ids = read_split(cfg.split);
    std::vector<cmaug::CollisionStats> per_scene(ids.size());
    std::vector<std::string> errors(ids.size());
    parallel_for(ids.size(), cfg.workers, [&](std::size_t i) {
      try {
        const auto in = load_augment_inputs(cfg, ids[i]);
        for (std::size_t t = 0; t < req.trials; ++t) {
          auto trial_cfg = aug;
          trial_cfg.seed = derive_seed(aug.seed, "trial#" + std::to_string(t));
          const auto r = cmaug::augment(in.scene, db, trial_cfg, req.criterion);
          per_scene[i].merge(cmaug::tabulate(r, in.scene.calib, req.criterion));
        }
      } catch (const std::exception& e) {
        errors[i] = "scene " + ids[i] + ": " + e.what();
      }
    });
    for (const auto& e : errors) {
      if (!e.empty()) throw IoError(e);
    }
    for (std::size_t i = 0; i < ids.size(); ++i) report.scenes.emplace_back(ids[i], per_scene[i]);
  }
  for (const auto& [_, s] : report.scenes) report.aggregate.merge(s);
  return report;
}

inline int cmd_collision_stats(const RunConfig& cfg, const StatsRequest& req, const fs::path& out_dir,
                               std::ostream& log) {
  const auto report = collect_collision_stats(cfg, req);
  nlohmann::json scenes = nlohmann::json::array();
  std::ostringstream csv;
  csv << "scene,trials,drawn,kept,admitted_pairs,severe_admitted,mean_pair_score\n";
  for (const auto& [id, s] : report.scenes) {
    auto j = stats_json(s);
    j["scene"] = id;
    scenes.push_back(j);
    csv << id << "," << s.trials << "," << s.drawn << "," << s.kept << "," << s.admitted_pairs << ","
        << s.severe_admitted << "," << io::text::shortest(s.mean_pair_score()) << "\n";
  }
  const nlohmann::json doc{{"criterion", cmaug::criterion_name(req.criterion)},
                           {"threshold", req.threshold},
                           {"trials", req.trials},
                           {"synthetic", req.synthetic},
                           {"scenes", scenes},
                           {"aggregate", stats_json(report.aggregate)}};
  fs::create_directories(out_dir);
  io::write_text(out_dir / "collision_stats.json", canonical(doc));
  io::write_text(out_dir / "collision_stats.csv", csv.str());
  log << "collision-stats (" << cmaug::criterion_name(req.criterion) << " <= " << req.threshold
      << "): kept " << report.aggregate.kept << "/" << report.aggregate.drawn << ", severe admitted "
      << report.aggregate.severe_admitted << "\n";
  return 0;
}

}  // namespace occdistill::cli

#endif  // OCCDISTILL_CLI_COMMANDS_HPP
