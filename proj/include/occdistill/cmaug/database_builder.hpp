#ifndef OCCDISTILL_CMAUG_DATABASE_BUILDER_HPP
#define OCCDISTILL_CMAUG_DATABASE_BUILDER_HPP

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "occdistill/cmaug/object_sample.hpp"
#include "occdistill/geometry/box3d.hpp"
#include "occdistill/io/calib.hpp"
#include "occdistill/io/image.hpp"
#include "occdistill/io/labels.hpp"
#include "occdistill/io/point_cloud.hpp"

namespace occdistill::cmaug {

/// Everything known about one training frame.
struct Scene {
  std::string id;
  PointCloud cloud;
  CalibMatrices calib;
  std::vector<LabelRecord> labels;
  Image image;
};

/// Rounds half-up to whole pixels and clips to the image. Absent when the
/// rounded rectangle is empty.
inline std::optional<DepthedBox2D> round_patch_box(const DepthedBox2D& b, ImageSize image) {
  auto snap = [](double v, std::size_t hi) {
    return std::clamp(std::floor(v + 0.5), 0.0, static_cast<double>(hi));
  };
  DepthedBox2D r{snap(b.x1, image.width), snap(b.y1, image.height), snap(b.x2, image.width),
                 snap(b.y2, image.height), b.depth};
  if (!(r.x1 < r.x2 && r.y1 < r.y2)) return std::nullopt;
  return r;
}

inline Image crop(const Image& src, const DepthedBox2D& rect) {
  const auto x0 = static_cast<std::size_t>(rect.x1), y0 = static_cast<std::size_t>(rect.y1);
  Image out(static_cast<std::size_t>(rect.width()), static_cast<std::size_t>(rect.height()));
  for (std::size_t y = 0; y < out.height; ++y) {
    std::copy_n(src.pixel(x0, y0 + y), out.width * 3, out.pixel(0, y));
  }
  return out;
}

/// Cuts every usable labelled object out of one scene: non-DontCare labels
/// with at least `min_points` LiDAR points and a visible projection.
inline std::vector<ObjectSample> extract_objects(const Scene& scene, std::size_t min_points) {
  std::vector<ObjectSample> out;
  const FrameTransform tf(scene.calib);
  const ImageSize size{scene.image.width, scene.image.height};
  for (std::size_t li = 0; li < scene.labels.size(); ++li) {
    const auto& label = scene.labels[li];
    if (label.dont_care()) continue;
    const Box3D box = box_from_label(label);
    const auto projected = project_box_to_2d(box, scene.calib, size);
    if (!projected) continue;
    const auto rect = round_patch_box(*projected, size);
    if (!rect) continue;
    const auto inside = points_in_box3d(scene.cloud.points, box, tf);
    if (inside.size() < min_points) continue;

    ObjectSample s;
    s.label = label;
    s.label.score.reset();
    s.box = box;
    s.points.reserve(inside.size());
    for (auto idx : inside) s.points.push_back(scene.cloud.points[idx]);
    s.patch = crop(scene.image, *rect);
    s.patch_box = *rect;
    s.source_scene = scene.id;
    s.label_index = li;
    out.push_back(std::move(s));
  }
  return out;
}

inline void add_to_database(GtDatabase& db, std::vector<ObjectSample> objects) {
  for (auto& o : objects) {
    auto& bucket = db.entries[o.class_name()];
    bucket.push_back(std::move(o));
  }
}

inline GtDatabase build_gt_database(std::span<const Scene> scenes, std::size_t min_points) {
  GtDatabase db;
  for (const auto& scene : scenes) add_to_database(db, extract_objects(scene, min_points));
  return db;
}

}  // namespace occdistill::cmaug

#endif  // OCCDISTILL_CMAUG_DATABASE_BUILDER_HPP
