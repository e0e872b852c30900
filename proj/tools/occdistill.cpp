// Command-line front end: occdistill <command> [flags]

#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>

#include "occdistill/cli/commands.hpp"

using namespace occdistill;
namespace fs = std::filesystem;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "TOML run configuration");
  cmd->add_option("--seed", f.seed, "global seed (overrides aug.seed)");
  cmd->add_option("--workers", f.workers, "scene-level worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--out", f.out, "output directory");
}

cli::RunConfig resolve(const CommonFlags& f) {
  cli::RunConfig cfg = f.config.empty() ? cli::RunConfig{} : cli::load_run_config(f.config);
  if (f.seed) cfg.aug.seed = *f.seed;
  if (f.workers) cfg.workers = *f.workers;
  if (f.out) cfg.output_root = *f.out;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Occupancy-guided distillation and cross-modal augmentation tools"};
  app.require_subcommand(1);
  CommonFlags common;

  auto* build_db = app.add_subcommand("build-db", "extract ground-truth objects into a database");
  add_common(build_db, common);

  auto* pseudo = app.add_subcommand("pseudo-ingest", "filter raw detections into pseudo-labels");
  add_common(pseudo, common);
  std::string predictions;
  pseudo->add_option("--predictions", predictions, "directory of <id>.txt detections")->required();

  auto* augment = app.add_subcommand("augment", "paste database objects into every split scene");
  add_common(augment, common);
  std::string database;
  augment->add_option("--database", database, "database directory (overrides config)");

  auto* occ = app.add_subcommand("occupancy", "BEV occupancy mask of one scene");
  add_common(occ, common);
  std::string scene, cloud, pgm;
  bool smooth = false;
  auto* scene_opt = occ->add_option("--scene", scene, "scene id under dataset_root/velodyne");
  auto* cloud_opt = occ->add_option("--cloud", cloud, "explicit .bin point cloud");
  scene_opt->excludes(cloud_opt);
  occ->add_flag("--smooth", smooth, "apply the Gaussian kernel");
  occ->add_option("--pgm", pgm, "also write a PGM preview");

  auto* loss = app.add_subcommand("distill-loss", "evaluate masked distillation losses");
  add_common(loss, common);
  std::string student, teacher, mask;
  loss->add_option("--student", student, "directory with feat/cls/loc/dir.npy")->required();
  loss->add_option("--teacher", teacher, "directory with feat/cls/loc/dir.npy")->required();
  loss->add_option("--mask", mask, "binary occupancy mask .npy")->required();

  auto* stats = app.add_subcommand("collision-stats", "IoU vs OAIS collision statistics");
  add_common(stats, common);
  std::string criterion = "oais";
  std::optional<double> threshold;
  std::size_t trials = 1;
  bool synthetic = false;
  std::string stats_db;
  stats->add_option("--criterion", criterion, "iou or oais")
      ->check(CLI::IsMember({"iou", "oais"}));
  stats->add_option("--threshold", threshold, "image-plane threshold")->check(CLI::Range(0.0, 1.0));
  stats->add_option("--trials", trials, "trials per scene");
  stats->add_flag("--synthetic", synthetic, "use seeded random layouts instead of a dataset");
  stats->add_option("--database", stats_db, "database directory (overrides config)");

  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = resolve(common);
    if (build_db->parsed()) {
      const fs::path out = common.out ? fs::path(*common.out) : cfg.database;
      if (out.empty()) throw ConfigError("build-db needs --out or a database path in the config");
      return cli::cmd_build_db(cfg, out, std::cout, std::cerr);
    }
    if (pseudo->parsed()) {
      const fs::path out = common.out ? fs::path(*common.out) : cfg.pseudo_labels;
      if (out.empty()) throw ConfigError("pseudo-ingest needs --out or pseudo_labels in the config");
      return cli::cmd_pseudo_ingest(cfg, predictions, out, std::cout, std::cerr);
    }
    if (augment->parsed()) {
      if (!database.empty()) cfg.database = database;
      return cli::cmd_augment(cfg, std::cout, std::cerr);
    }
    if (occ->parsed()) {
      fs::path cloud_path = cloud;
      std::string name = fs::path(cloud).stem().string();
      if (!scene.empty()) {
        cloud_path = cli::DatasetLayout{cfg.dataset_root}.cloud(scene);
        name = scene;
      }
      if (cloud_path.empty()) throw ConfigError("occupancy needs --scene or --cloud");
      const fs::path out = cfg.output_root / (name + (smooth ? "_smooth" : "") + ".npy");
      std::optional<fs::path> pgm_path;
      if (!pgm.empty()) pgm_path = pgm;
      return cli::cmd_occupancy(cfg, cloud_path, out, smooth, pgm_path, std::cout);
    }
    if (loss->parsed()) {
      std::optional<fs::path> out;
      if (common.out) out = fs::path(*common.out) / "distill_loss.json";
      return cli::cmd_distill_loss(cfg, student, teacher, mask, out, std::cout);
    }
    if (stats->parsed()) {
      if (!stats_db.empty()) cfg.database = stats_db;
      cli::StatsRequest req;
      req.criterion = cmaug::parse_criterion(criterion);
      req.threshold = threshold.value_or(cfg.aug.oais_threshold);
      req.trials = trials;
      req.synthetic = synthetic;
      return cli::cmd_collision_stats(cfg, req, cfg.output_root, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
