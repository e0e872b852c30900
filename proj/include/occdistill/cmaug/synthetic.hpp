#ifndef OCCDISTILL_CMAUG_SYNTHETIC_HPP
#define OCCDISTILL_CMAUG_SYNTHETIC_HPP

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "occdistill/cmaug/augment.hpp"
#include "occdistill/cmaug/database_builder.hpp"
#include "occdistill/geometry/box3d.hpp"
#include "occdistill/geometry/overlap.hpp"
#include "occdistill/rng.hpp"

/// Seeded generators for KITTI-like frames, objects and collision layouts.
/// Used by the synthetic mode of the statistics command and by the tests.
namespace occdistill::cmaug::synthetic {

inline constexpr ImageSize kImageSize{1242, 375};

/// Calibration of KITTI object frame 000000.
inline CalibMatrices kitti_calib() {
  CalibMatrices c;
  c.p2 = {7.215377e+02, 0.000000e+00, 6.095593e+02, 4.485728e+01,
          0.000000e+00, 7.215377e+02, 1.728540e+02, 2.163791e-01,
          0.000000e+00, 0.000000e+00, 1.000000e+00, 2.745884e-03};
  c.r0 = {9.999239e-01,  9.837760e-03,  -7.445048e-03, -9.869795e-03, 9.999421e-01,
          -4.278459e-03, 7.402527e-03,  4.351614e-03,  9.999631e-01};
  c.tr_velo_to_cam = {7.533745e-03,  -9.999714e-01, -6.166020e-04, -4.069766e-03,
                      1.480249e-02,  7.280733e-04,  -9.998902e-01, -7.631618e-02,
                      9.998621e-01,  7.523790e-03,  1.480755e-02,  -2.717806e-01};
  return c;
}

struct ClassShape {
  const char* name;
  double h, w, l;
};

inline constexpr ClassShape kClasses[] = {
    {"Car", 1.53, 1.63, 3.88}, {"Pedestrian", 1.76, 0.66, 0.84}, {"Cyclist", 1.74, 0.60, 1.76}};

inline LabelRecord label_for(const Box3D& b, const std::optional<DepthedBox2D>& pv) {
  LabelRecord r;
  r.class_name = b.class_name;
  r.alpha = normalize_angle(b.ry - std::atan2(b.location.x, b.location.z));
  if (pv) r.bbox = {pv->x1, pv->y1, pv->x2, pv->y2};
  r.dims = {b.h, b.w, b.l};
  r.location = {b.location.x, b.location.y, b.location.z};
  r.ry = b.ry;
  return r;
}

/// Random object of class `shape` standing on the ground in front of the
/// camera, depth in [z_min, z_max].
inline Box3D random_box(Rng& rng, const ClassShape& shape, double z_min, double z_max) {
  Box3D b;
  b.class_name = shape.name;
  const double jitter = rng.uniform(0.9, 1.1);
  b.h = shape.h * jitter;
  b.w = shape.w * rng.uniform(0.9, 1.1);
  b.l = shape.l * rng.uniform(0.9, 1.1);
  const double z = rng.uniform(z_min, z_max);
  b.location = {rng.uniform(-0.45, 0.45) * z, 1.65 + rng.uniform(-0.1, 0.1), z};
  b.ry = normalize_angle(rng.uniform(-std::numbers::pi, std::numbers::pi));
  return b;
}

/// `count` points strictly inside `b` (2.5% margin on every face), LiDAR frame.
inline std::vector<LidarPoint> points_inside(Rng& rng, const Box3D& b, const FrameTransform& tf,
                                             std::size_t count) {
  std::vector<LidarPoint> pts;
  const double c = std::cos(b.ry), s = std::sin(b.ry);
  for (std::size_t n = 0; n < count; ++n) {
    const double lx = rng.uniform(-0.475, 0.475) * b.l;
    const double ly = -rng.uniform(0.025, 0.975) * b.h;
    const double lz = rng.uniform(-0.475, 0.475) * b.w;
    const Vec3 cam = b.location + Vec3{c * lx + s * lz, ly, -s * lx + c * lz};
    const Vec3 lidar = tf.to_lidar(cam);
    pts.push_back({static_cast<float>(lidar.x), static_cast<float>(lidar.y),
                   static_cast<float>(lidar.z), static_cast<float>(rng.uniform())});
  }
  return pts;
}

inline void fill_background(Image& img, std::uint64_t salt) {
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      auto* p = img.pixel(x, y);
      p[0] = static_cast<std::uint8_t>((x + salt) & 0xff);
      p[1] = static_cast<std::uint8_t>((y * 2 + salt / 3) & 0xff);
      p[2] = static_cast<std::uint8_t>((x + y + salt / 7) & 0xff);
    }
  }
}

/// Noise texture over the (rounded, clipped) rectangle.
inline void paint(Image& img, Rng& rng, const DepthedBox2D& rect) {
  const auto base = static_cast<std::uint8_t>(rng.below(256));
  for (auto y = static_cast<std::size_t>(rect.y1); y < static_cast<std::size_t>(rect.y2); ++y) {
    for (auto x = static_cast<std::size_t>(rect.x1); x < static_cast<std::size_t>(rect.x2); ++x) {
      auto* p = img.pixel(x, y);
      p[0] = base;
      p[1] = static_cast<std::uint8_t>(rng.below(256));
      p[2] = static_cast<std::uint8_t>(rng.below(256));
    }
  }
}

inline ImageSize size_of(const Image& img) { return {img.width, img.height}; }

/// Standalone database object built from `b`: interior points and a textured
/// patch at its rounded projection. Absent if the box is not visible.
inline std::optional<ObjectSample> make_sample(Rng& rng, const Box3D& b, const CalibMatrices& calib,
                                               ImageSize image, const std::string& scene_id,
                                               std::size_t index, std::size_t num_points = 40) {
  const auto pv = project_box_to_2d(b, calib, image);
  if (!pv) return std::nullopt;
  const auto rect = round_patch_box(*pv, image);
  if (!rect) return std::nullopt;
  ObjectSample s;
  s.box = b;
  s.label = label_for(b, pv);
  s.points = points_inside(rng, b, FrameTransform(calib), num_points);
  s.patch = Image(static_cast<std::size_t>(rect->width()), static_cast<std::size_t>(rect->height()));
  paint(s.patch, rng, {0, 0, rect->width(), rect->height(), 0});
  s.patch_box = *rect;
  s.source_scene = scene_id;
  s.label_index = index;
  return s;
}

struct SceneOptions {
  std::size_t objects = 4;
  std::size_t background_points = 2000;
  std::size_t min_object_points = 15, max_object_points = 120;
  double z_min = 6, z_max = 45;
};

/// KITTI-like frame: ground plane points, objects that do not overlap in BEV,
/// their interior points, and an image with each visible object painted in.
inline Scene make_scene(std::uint64_t seed, const std::string& id, const SceneOptions& opt = {}) {
  Rng rng(derive_seed(seed, id));
  Scene scene;
  scene.id = id;
  scene.calib = kitti_calib();
  scene.image = Image(kImageSize.width, kImageSize.height);
  fill_background(scene.image, rng.below(1000));
  const FrameTransform tf(scene.calib);

  std::vector<Box3D> boxes;
  for (std::size_t attempt = 0; boxes.size() < opt.objects && attempt < 50 * (opt.objects + 1);
       ++attempt) {
    const auto& shape = kClasses[rng.below(3)];
    Box3D b = random_box(rng, shape, opt.z_min, opt.z_max);
    bool clear = true;
    for (const auto& o : boxes) {
      if (iou_bev(box3d_to_bev(b, tf), box3d_to_bev(o, tf)) > 0) clear = false;
    }
    if (clear) boxes.push_back(b);
  }

  for (std::size_t n = 0; n < opt.background_points; ++n) {
    scene.cloud.points.push_back({static_cast<float>(rng.uniform(0, 70)),
                                  static_cast<float>(rng.uniform(-40, 40)),
                                  static_cast<float>(-1.73 + rng.uniform(-0.05, 0.05)),
                                  static_cast<float>(rng.uniform())});
  }
  // Paint far to near so nearer objects occlude.
  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](auto a, auto b) { return boxes[a].location.z > boxes[b].location.z; });
  std::vector<std::optional<DepthedBox2D>> pv(boxes.size());
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    pv[i] = project_box_to_2d(boxes[i], scene.calib, kImageSize);
  }
  for (auto i : order) {
    if (pv[i]) {
      if (auto rect = round_patch_box(*pv[i], kImageSize)) paint(scene.image, rng, *rect);
    }
  }
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto n = opt.min_object_points +
                   rng.below(opt.max_object_points - opt.min_object_points + 1);
    const auto pts = points_inside(rng, boxes[i], tf, n);
    scene.cloud.points.insert(scene.cloud.points.end(), pts.begin(), pts.end());
    scene.labels.push_back(label_for(boxes[i], pv[i]));
  }
  return scene;
}

inline GtDatabase make_database(std::uint64_t seed, std::size_t scenes, std::size_t min_points = 5,
                                const SceneOptions& opt = {}) {
  GtDatabase db;
  for (std::size_t i = 0; i < scenes; ++i) {
    add_to_database(db, extract_objects(make_scene(seed, "db" + std::to_string(i), opt), min_points));
  }
  return db;
}

/// A box behind `near` whose image box lies entirely inside near's and covers
/// less than `max_ratio` of it, with BEV footprints disjoint. Built by scaling
/// `near` away from the camera and shrinking it; verified, retried on failure.
inline std::optional<Box3D> contained_behind(Rng& rng, const Box3D& near, const CalibMatrices& calib,
                                             ImageSize image, double max_ratio = 0.5) {
  const auto near_pv = project_box_to_2d(near, calib, image);
  if (!near_pv) return std::nullopt;
  const FrameTransform tf(calib);
  for (int attempt = 0; attempt < 40; ++attempt) {
    const double s = rng.uniform(1.6, 2.6);
    const double r = rng.uniform(0.35, 0.7);
    Box3D far = near;
    far.h = near.h * s * r;
    far.w = near.w * s * r;
    far.l = near.l * s * r;
    const Vec3 center = near.location - Vec3{0, near.h / 2, 0};
    far.location = s * center + Vec3{0, far.h / 2, 0};
    const auto far_pv = project_box_to_2d(far, calib, image);
    if (!far_pv) continue;
    const bool inside = far_pv->x1 >= near_pv->x1 && far_pv->x2 <= near_pv->x2 &&
                        far_pv->y1 >= near_pv->y1 && far_pv->y2 <= near_pv->y2;
    if (!inside || far_pv->area() >= max_ratio * near_pv->area()) continue;
    if (iou_bev(box3d_to_bev(far, tf), box3d_to_bev(near, tf)) > 0) continue;
    return far;
  }
  return std::nullopt;
}

}  // namespace occdistill::cmaug::synthetic

#endif  // OCCDISTILL_CMAUG_SYNTHETIC_HPP
