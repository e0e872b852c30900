// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "occdistill/cli/commands.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace occdistill;
namespace fs = std::filesystem;
namespace syn = occdistill::cmaug::synthetic;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond && pass) detail << "failed: " << what << "; ";
    pass = pass && cond;
  }
};

int run_cli(const std::string& args) {
  const std::string cmd = std::string(OCCDISTILL_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

DenseTensor random_tensor(Rng& rng, std::size_t w, std::size_t h, std::size_t c, double lo, double hi) {
  DenseTensor t(w, h, c);
  for (auto& v : t.data()) v = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

occupancy::OccupancyMask random_binary(Rng& rng, std::size_t w, std::size_t h, double density) {
  occupancy::OccupancyMask m(w, h);
  for (auto& v : m.values()) v = rng.uniform() < density ? 1.f : 0.f;
  return m;
}

bool rel_close(double got, double want, double tol) {
  return std::abs(got - want) <= tol * std::max(std::abs(want), 1e-300);
}

// --- criteria ------------------------------------------------------------------

void ac1(Outcome& o) {
  Rng rng(derive_seed(1, "ac1"));
  std::size_t oais_one = 0, iou_below = 0;
  const std::size_t n = 10000;
  const auto t0 = Clock::now();
  for (std::size_t k = 0; k < n; ++k) {
    DepthedBox2D outer;
    outer.x1 = rng.uniform(0, 1000), outer.y1 = rng.uniform(0, 300);
    outer.x2 = outer.x1 + rng.uniform(20, 300), outer.y2 = outer.y1 + rng.uniform(20, 200);
    outer.depth = rng.uniform(5, 40);
    const double rw = rng.uniform(0.05, 0.95);
    const double rh = rng.uniform(0.05, std::min(0.95, 0.499 / rw));
    DepthedBox2D inner;
    inner.x1 = outer.x1 + rng.uniform(0, 1 - rw) * outer.width();
    inner.y1 = outer.y1 + rng.uniform(0, 1 - rh) * outer.height();
    inner.x2 = inner.x1 + rw * outer.width();
    inner.y2 = inner.y1 + rh * outer.height();
    inner.x2 = std::min(inner.x2, outer.x2), inner.y2 = std::min(inner.y2, outer.y2);
    inner.depth = outer.depth + rng.uniform(0.1, 30);
    if (!(inner.area() < 0.5 * outer.area())) {
      o.require(false, "generator produced ratio >= 0.5");
      return;
    }
    const bool swap = rng.coin();
    const auto& a = swap ? inner : outer;
    const auto& b = swap ? outer : inner;
    Rng unused(0);
    if (oais(a, b, unused) == 1.0) ++oais_one;
    if (iou_2d(a, b) < 0.5) ++iou_below;
  }
  const double dt = seconds_since(t0);
  o.detail << n << " pairs, oais=1: " << oais_one << ", iou<0.5: " << iou_below << ", " << dt << " s";
  o.require(oais_one == n, "oais == 1 for every pair");
  o.require(iou_below == n, "iou < 0.5 for every pair");
  o.require(dt < 1.0, "runtime < 1 s");
}

void ac2(Outcome& o) {
  const occupancy::GridConfig g;
  Rng rng(derive_seed(2, "ac2"));
  std::size_t exact = 0;
  const auto t0 = Clock::now();
  for (int c = 0; c < 100; ++c) {
    const auto n = 10000 + static_cast<std::size_t>(rng.below(90001));
    std::vector<LidarPoint> pts(n);
    for (auto& p : pts) {
      p = {static_cast<float>(rng.uniform(0, 50)), static_cast<float>(rng.uniform(-32, 32)),
           static_cast<float>(rng.uniform(-3.5, 1.5)), static_cast<float>(rng.uniform())};
    }
    if (occupancy::build_occupancy_mask(pts, g) == oracle::fine_grid_mask(pts, g)) ++exact;
  }
  const double dt = seconds_since(t0);
  o.detail << exact << "/100 clouds identical to the fine-grid oracle, " << dt << " s";
  o.require(exact == 100, "all clouds match");
  o.require(dt < 30.0, "runtime < 30 s");
}

void ac3(Outcome& o) {
  const auto d = occupancy::derive_bev_dims(occupancy::GridConfig{});
  o.detail << "fine " << d.fine_w << "x" << d.fine_h << "x" << d.depth << ", BEV " << d.bev_w << "x"
           << d.bev_h << ", cell " << d.cell_x << " x " << d.cell_y << " x " << d.cell_z
           << " m (fine H 1504, printed value 1540 disagrees)";
  o.require(d.bev_w == 140 && d.bev_h == 188 && d.depth == 40, "BEV 140 x 188, D 40");
  o.require(d.fine_w == 1120 && d.fine_h == 1504 && d.fine_h != 1540, "fine 1120 x 1504");
  o.require(std::abs(d.cell_x - 0.32) < 1e-12 && std::abs(d.cell_y - 0.32) < 1e-12 &&
                std::abs(d.cell_z - 4.0) < 1e-12,
            "cell 0.32 x 0.32 x 4 m");
  o.require(8 * 8 * d.depth == 2560, "8 x 8 x 40 = 2560 voxels per cell");
}

void ac4(Outcome& o) {
  using namespace distill;
  Rng rng(derive_seed(4, "ac4"));
  const auto t0 = Clock::now();
  const occupancy::SmoothingConfig sm{5, 1.0};
  const LossConfig cfg;
  std::size_t ok = 0;
  double worst = 0;
  for (int f = 0; f < 50; ++f) {
    const std::size_t W = 1 + rng.below(16), H = 1 + rng.below(16);
    const std::size_t A = 1 + rng.below(2), K = 1 + rng.below(3), R = 7, C = 1 + rng.below(8);
    const auto s_feat = random_tensor(rng, W, H, C, -2, 2), t_feat = random_tensor(rng, W, H, C, -2, 2);
    PredictionMaps s{random_tensor(rng, W, H, A * K, 0, 1), random_tensor(rng, W, H, A * R, -2, 2),
                     random_tensor(rng, W, H, A * 2, -3, 3)};
    PredictionMaps t{random_tensor(rng, W, H, A * K, 0, 1), random_tensor(rng, W, H, A * R, -2, 2),
                     random_tensor(rng, W, H, A * 2, -3, 3)};
    const auto mask = random_binary(rng, W, H, rng.uniform(0.1, 0.9));
    const auto soft = oracle::naive_smooth(mask, 5, 1.0);

    const double feat = oracle::literal(soft, W, H, C, [&](auto i, auto j, auto c) {
      const double d = double(s_feat.at(i, j, c)) - t_feat.at(i, j, c);
      return d * d;
    });
    const double cls = oracle::literal(soft, W, H, A * K, [&](auto i, auto j, auto c) {
      return oracle::qfl(t.cls.at(i, j, c), s.cls.at(i, j, c), 2);
    });
    const double loc = oracle::literal(soft, W, H, A * R, [&](auto i, auto j, auto c) {
      return oracle::smooth_l1(double(s.loc.at(i, j, c)) - t.loc.at(i, j, c), 1.0 / 9);
    });
    const double dir = oracle::literal(soft, W, H, A, [&](auto i, auto j, auto a) {
      return oracle::ce(s.dir.at(i, j, 2 * a), s.dir.at(i, j, 2 * a + 1), t.dir.at(i, j, 2 * a),
                        t.dir.at(i, j, 2 * a + 1));
    });
    const double got_feat = feat_kd_loss(s_feat, t_feat, mask, sm, cfg);
    const auto got = resp_kd_loss(s, t, mask, sm, cfg);
    const std::pair<double, double> cmp[] = {
        {got_feat, feat}, {got.cls, cls}, {got.loc, loc}, {got.dir, dir}, {got.total, cls + loc + dir}};
    bool all = true;
    for (auto [g, w] : cmp) {
      all = all && rel_close(g, w, 1e-5);
      if (w != 0) worst = std::max(worst, std::abs(g - w) / std::abs(w));
    }
    ok += all;
  }
  auto scalar = [](float v) {
    DenseTensor t(1, 1, 1);
    t.at(0, 0, 0) = v;
    return t;
  };
  auto pair = [](float a, float b) {
    DenseTensor t(1, 1, 2);
    t.at(0, 0, 0) = a, t.at(0, 0, 1) = b;
    return t;
  };
  LossMap diag(2, 2, 1);
  diag.values = {1, 4, 9, 16};
  occupancy::OccupancyMask dm(2, 2);
  dm(0, 0) = 1.f, dm(1, 1) = 1.f;
  const std::pair<double, double> hand[] = {
      {qfl_map(scalar(0.5f), scalar(1.f), 2).values[0], 0.173287},
      {ce_map(pair(0, 0), pair(0, 0)).values[0], 0.693147},
      {smooth_l1_map(scalar(1.f / 18), scalar(0), 1.0 / 9).values[0], 0.0138889},
      {smooth_l1_map(scalar(1), scalar(0), 1.0 / 9).values[0], 0.9444444},
      {apply_mask_reduce(diag, dm, Reduction::kLiteral), 257.0}};
  std::size_t hand_ok = 0;
  for (auto [g, w] : hand) hand_ok += std::abs(g - w) <= 1e-6;
  const double dt = seconds_since(t0);
  o.detail << ok << "/50 fixtures within 1e-5 (worst rel " << worst << "), hand values " << hand_ok
           << "/5, " << dt << " s";
  o.require(ok == 50, "fixtures match scalar oracles");
  o.require(hand_ok == 5, "hand values");
  o.require(dt < 10.0, "runtime < 10 s");
}

void ac5(Outcome& o) {
  using namespace distill;
  Rng rng(derive_seed(5, "ac5"));
  std::size_t zero_ok = 0, ones_ok = 0, scale_ok = 0, scale_total = 0;
  double worst = 0;
  for (int f = 0; f < 20; ++f) {
    const std::size_t W = 2 + rng.below(15), H = 2 + rng.below(15), C = 1 + rng.below(6);
    const auto l = mse_map(random_tensor(rng, W, H, C, -1, 1), random_tensor(rng, W, H, C, -1, 1));
    occupancy::OccupancyMask zero(W, H), ones(W, H), m(W, H);
    for (auto& v : ones.values()) v = 1.f;
    for (auto& v : m.values()) v = static_cast<float>(rng.uniform(0, 0.25));
    double plain = 0;
    for (double v : l.values) plain += v * v;
    zero_ok += apply_mask_reduce(l, zero, Reduction::kLiteral) == 0.0 &&
               apply_mask_reduce(l, zero, Reduction::kMaskedMean) == 0.0;
    ones_ok += rel_close(apply_mask_reduce(l, ones, Reduction::kLiteral), plain, 1e-12);
    const double base = apply_mask_reduce(l, m, Reduction::kLiteral);
    // Powers of two keep the float mask scaling exact.
    for (float alpha : {0.25f, 0.5f, 2.f, 4.f}) {
      auto scaled = m;
      for (auto& v : scaled.values()) v *= alpha;
      const double got = apply_mask_reduce(l, scaled, Reduction::kLiteral);
      const double want = double(alpha) * alpha * base;
      worst = std::max(worst, std::abs(got - want) / want);
      ++scale_total;
      scale_ok += rel_close(got, want, 1e-9);
    }
  }
  // End to end through the loss functions with an empty occupancy mask.
  const occupancy::OccupancyMask empty(6, 5);
  const PredictionMaps p{random_tensor(rng, 6, 5, 2, 0, 1), random_tensor(rng, 6, 5, 14, -1, 1),
                         random_tensor(rng, 6, 5, 4, -1, 1)};
  const PredictionMaps t{random_tensor(rng, 6, 5, 2, 0, 1), random_tensor(rng, 6, 5, 14, -1, 1),
                         random_tensor(rng, 6, 5, 4, -1, 1)};
  const bool e2e = feat_kd_loss(random_tensor(rng, 6, 5, 3, -1, 1), random_tensor(rng, 6, 5, 3, -1, 1), empty,
                                {}, {}) == 0.0 &&
                   resp_kd_loss(p, t, empty, {}, {}).total == 0.0;
  o.detail << "zero " << zero_ok << "/20, ones " << ones_ok << "/20, scaling " << scale_ok << "/"
           << scale_total << " (worst rel " << worst << "), empty-mask losses " << (e2e ? "0" : "nonzero");
  o.require(zero_ok == 20 && e2e, "zero mask gives zero loss");
  o.require(ones_ok == 20, "all-ones literal equals unmasked squared norm");
  o.require(scale_ok == scale_total, "alpha^2 scaling within 1e-9");
}

void ac6(Outcome& o) {
  using occupancy::OccupancyMask;
  Rng rng(derive_seed(6, "ac6"));
  bool sums = true, delta = true, mass = true;
  for (int k : {1, 3, 5, 7, 9}) {
    for (double sigma : {0.5, 1.0, 2.0, 3.7}) {
      const auto w = occupancy::gaussian_kernel({k, sigma});
      double total = 0;
      for (double v : w) total += v;
      sums = sums && std::abs(total - 1.0) <= 1e-12;

      OccupancyMask m(k + 8, k + 9);
      m(4 + k / 2, 5 + k / 2) = 1.f;
      const auto out = occupancy::smooth_mask(m, {k, sigma});
      for (int di = 0; di < k; ++di) {
        for (int dj = 0; dj < k; ++dj) {
          const float want = static_cast<float>(w[static_cast<std::size_t>(di * k + dj)]);
          delta = delta && out(static_cast<std::size_t>(4 + di), static_cast<std::size_t>(5 + dj)) == want;
        }
      }
      delta = delta && std::abs(out.sum() - 1.0) <= 1e-6;

      OccupancyMask interior(40, 30);
      for (std::size_t i = k / 2; i + k / 2 < 40; ++i) {
        for (std::size_t j = k / 2; j + k / 2 < 30; ++j) interior(i, j) = rng.uniform() < 0.3 ? 1.f : 0.f;
      }
      const auto smoothed = occupancy::smooth_mask(interior, {k, sigma});
      mass = mass && std::abs(smoothed.sum() - interior.sum()) <= 1e-6 * std::max(1.0, interior.sum());
    }
  }
  std::size_t naive_ok = 0;
  for (int n = 0; n < 20; ++n) {
    const auto m = random_binary(rng, 5 + rng.below(40), 5 + rng.below(40), rng.uniform(0.05, 0.7));
    const int k = 1 + 2 * static_cast<int>(rng.below(5));
    const double sigma = rng.uniform(0.4, 2.5);
    const auto got = occupancy::smooth_mask(m, {k, sigma});
    const auto want = oracle::naive_smooth(m, k, sigma);
    bool same = true;
    for (std::size_t c = 0; c < want.size(); ++c) same = same && std::abs(got.values()[c] - want[c]) <= 1e-6;
    naive_ok += same;
  }
  o.detail << "kernel sums " << (sums ? "ok" : "bad") << ", delta " << (delta ? "ok" : "bad") << ", mass "
           << (mass ? "ok" : "bad") << ", naive oracle " << naive_ok << "/20";
  o.require(sums, "kernel sums to 1");
  o.require(delta, "delta response equals kernel");
  o.require(mass, "interior mass preserved");
  o.require(naive_ok == 20, "naive convolution oracle");
}

void ac7(Outcome& o) {
  const auto db = syn::make_database(derive_seed(7, "db"), 12);
  const auto scenes = fixture::synthetic_scenes(derive_seed(7, "scenes"), 100);
  cmaug::AugConfig cfg;
  std::size_t audits = 0, pasted = 0, oracle_pairs = 0, oracle_bad = 0;
  for (std::size_t n = 0; n < scenes.size(); ++n) {
    const auto& s = scenes[n];
    cfg.seed = n;
    const cmaug::SceneInputs in{s.id, s.cloud, s.image, s.calib, s.labels, s.labels};
    const auto r = cmaug::augment(in, db, cfg);
    audits += cmaug::audit_augmentation(in, r, cfg).ok();
    pasted += r.kept.size();

    // Independent check of every pasted pair: lattice-exact image coverage of
    // the deeper box and grid-integrated BEV overlap.
    const FrameTransform tf(s.calib);
    std::vector<cmaug::CollisionShape> all = r.existing;
    const std::size_t first_pasted = all.size();
    for (auto k : r.kept) all.push_back(cmaug::shape_of_sample(*r.drawn[k].sample, tf));
    for (std::size_t a = first_pasted; a < all.size(); ++a) {
      for (std::size_t b = 0; b < a; ++b) {
        ++oracle_pairs;
        const double bev = oracle::grid_intersection(all[a].bev, all[b].bev, 200);
        const double cell = 4 * std::hypot(all[a].bev.l + all[b].bev.l, all[a].bev.w + all[b].bev.w) / 200;
        bool bad = bev > cell;  // threshold 0 with one grid row of slack
        if (all[a].pv && all[b].pv) {
          const auto& pa = *all[a].pv;
          const auto& pb = *all[b].pv;
          const double inter = oracle::raster_intersection(pa, pb, 2);
          const double cover = pa.depth == pb.depth ? inter / std::max(pa.area(), pb.area())
                                                    : inter / (pa.depth > pb.depth ? pa : pb).area();
          bad = bad || cover > cfg.oais_threshold + 1e-9;
        }
        oracle_bad += bad;
      }
    }
  }
  o.detail << audits << "/100 audits clean, " << pasted << " objects pasted, " << oracle_pairs
           << " pairs rechecked, " << oracle_bad << " oracle violations";
  o.require(audits == 100, "every audit passes");
  o.require(pasted > 0, "objects were pasted");
  o.require(oracle_bad == 0, "independent pair check");
}

void ac8(Outcome& o) {
  fixture::TempDir dir;
  fixture::write_dataset(dir / "data", fixture::synthetic_scenes(derive_seed(8, "scenes"), 8));
  io::save_database(syn::make_database(derive_seed(8, "db"), 10), dir / "db");
  io::write_text(dir / "run.toml", "dataset_root = \"data\"\nsplit = \"data/split.txt\"\ndatabase = \"db\"\n");
  const std::string base = "augment --config " + q(dir / "run.toml") + " --seed 2024 ";
  const int c1 = run_cli(base + "--workers 1 --out " + q(dir / "a"));
  const int c2 = run_cli(base + "--workers 1 --out " + q(dir / "b"));
  const int c3 = run_cli(base + "--workers 8 --out " + q(dir / "c"));
  o.require(c1 == 0 && c2 == 0 && c3 == 0, "augment exits 0");
  if (!o.pass) return;
  const auto ha = fixture::tree_sha256(dir / "a"), hb = fixture::tree_sha256(dir / "b"),
             hc = fixture::tree_sha256(dir / "c");
  o.detail << "tree sha256 " << ha.substr(0, 16) << " (run 2 " << (ha == hb ? "equal" : "differs")
           << ", 8 workers " << (ha == hc ? "equal" : "differs") << ")";
  o.require(ha == hb, "identical across runs");
  o.require(ha == hc, "identical across worker counts");
}

void ac9(Outcome& o) {
  fixture::TempDir dir;
  std::map<std::string, nlohmann::json> agg;
  for (const char* crit : {"oais", "iou"}) {
    const int code = run_cli(std::string("collision-stats --synthetic --criterion ") + crit +
                             " --threshold 0.5 --trials 200 --seed 9 --out " + q(dir / crit));
    o.require(code == 0, std::string("collision-stats ") + crit + " exits 0");
    if (code != 0) return;
    agg[crit] = nlohmann::json::parse(io::read_text(dir / crit / "collision_stats.json"))["aggregate"];
  }
  const auto so = agg["oais"]["severe_admitted"].get<std::size_t>();
  const auto si = agg["iou"]["severe_admitted"].get<std::size_t>();
  o.detail << "severe admissions over 200 trials: oais " << so << ", iou " << si;
  o.require(so == 0, "none under OAIS");
  o.require(si > 0, "some under IoU");
}

void ac10(Outcome& o) {
  syn::SceneOptions opt;
  opt.objects = 6;
  opt.background_points = 120000;
  auto scene = syn::make_scene(derive_seed(10, "scene"), "throughput", opt);
  scene.cloud.points.resize(120000);
  const auto db = syn::make_database(derive_seed(10, "db"), 12);
  cmaug::AugConfig cfg;
  cfg.samples_per_class = {{"Car", 10}};
  const std::size_t cars = db.entries.count("Car") ? db.entries.at("Car").size() : 0;
  const cmaug::SceneInputs in{scene.id, scene.cloud, scene.image, scene.calib, scene.labels, scene.labels};

  double aug_best = 1e9, occ_best = 1e9;
  std::size_t drawn = 0;
  for (int rep = 0; rep < 3; ++rep) {
    auto t0 = Clock::now();
    const auto r = cmaug::augment(in, db, cfg);
    aug_best = std::min(aug_best, seconds_since(t0));
    drawn = r.drawn.size();
    t0 = Clock::now();
    const auto m = occupancy::build_occupancy_mask(scene.cloud, occupancy::GridConfig{});
    occ_best = std::min(occ_best, seconds_since(t0));
    if (m.sum() == 0) o.require(false, "non-empty mask");
  }
  o.detail << scene.cloud.size() << " points, " << drawn << " candidates, augment " << aug_best * 1e3
           << " ms, occupancy " << occ_best * 1e3 << " ms (best of 3)";
  o.require(cars >= 10 && drawn == 10, "10 candidates drawn");
  o.require(aug_best < 1.0, "augment < 1 s");
  o.require(occ_best < 0.1, "occupancy < 100 ms");
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<void(Outcome&)>> criteria[] = {
      {"AC1 oais containment law", ac1},       {"AC2 occupancy oracle equivalence", ac2},
      {"AC3 grid geometry", ac3},              {"AC4 loss kernels vs scalar oracles", ac4},
      {"AC5 mask identities", ac5},            {"AC6 smoothing properties", ac6},
      {"AC7 augmentation audit", ac7},         {"AC8 determinism", ac8},
      {"AC9 collision-stats contrast", ac9},   {"AC10 throughput budget", ac10},
  };
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      fn(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail.str() << std::endl;
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
