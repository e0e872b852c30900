#ifndef OCCDISTILL_CMAUG_OBJECT_SAMPLE_HPP
#define OCCDISTILL_CMAUG_OBJECT_SAMPLE_HPP

#include <map>
#include <string>
#include <vector>

#include "occdistill/geometry/box3d.hpp"
#include "occdistill/geometry/types.hpp"
#include "occdistill/io/image.hpp"
#include "occdistill/io/labels.hpp"
#include "occdistill/io/point_cloud.hpp"

namespace occdistill {

/// A croppable object: its LiDAR points, its image patch and the label that
/// describes it, all taken from one source scene.
struct ObjectSample {
  LabelRecord label;
  Box3D box;                       // derived from `label`
  std::vector<LidarPoint> points;  // sensor frame of the source scene
  Image patch;
  DepthedBox2D patch_box;  // integer pixel rectangle in the source image
  std::string source_scene;
  std::size_t label_index = 0;  // line of the source label file

  const std::string& class_name() const noexcept { return label.class_name; }
  std::size_t num_points() const noexcept { return points.size(); }

  friend bool operator==(const ObjectSample&, const ObjectSample&) = default;
};

/// Objects grouped by class name, each list in scene order.
struct GtDatabase {
  std::map<std::string, std::vector<ObjectSample>> entries;

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& [_, v] : entries) n += v.size();
    return n;
  }

  friend bool operator==(const GtDatabase&, const GtDatabase&) = default;
};

}  // namespace occdistill

#endif  // OCCDISTILL_CMAUG_OBJECT_SAMPLE_HPP
