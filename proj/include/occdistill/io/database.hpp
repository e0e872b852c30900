#ifndef OCCDISTILL_IO_DATABASE_HPP
#define OCCDISTILL_IO_DATABASE_HPP

#include <zlib.h>

#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>

#include "occdistill/cmaug/object_sample.hpp"
#include "occdistill/error.hpp"
#include "occdistill/io/file.hpp"
#include "occdistill/io/image.hpp"
#include "occdistill/io/point_cloud.hpp"

namespace occdistill::io {

inline constexpr const char* kManifestName = "manifest.json";
inline constexpr int kManifestVersion = 1;

inline std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  return static_cast<std::uint32_t>(
      ::crc32(::crc32(0L, Z_NULL, 0), bytes.data(), static_cast<uInt>(bytes.size())));
}

namespace detail {

inline nlohmann::json label_to_json(const LabelRecord& r) {
  return {{"class", r.class_name},       {"truncation", r.truncation},
          {"occlusion", r.occlusion},     {"alpha", r.alpha},
          {"bbox", r.bbox},               {"dims_hwl", r.dims},
          {"location", r.location},       {"ry", r.ry}};
}

inline LabelRecord label_from_json(const nlohmann::json& j) {
  LabelRecord r;
  r.class_name = j.at("class").get<std::string>();
  r.truncation = j.at("truncation").get<double>();
  r.occlusion = j.at("occlusion").get<int>();
  r.alpha = j.at("alpha").get<double>();
  r.bbox = j.at("bbox").get<std::array<double, 4>>();
  r.dims = j.at("dims_hwl").get<std::array<double, 3>>();
  r.location = j.at("location").get<std::array<double, 3>>();
  r.ry = j.at("ry").get<double>();
  return r;
}

inline std::string object_stem(const ObjectSample& s) {
  return s.source_scene + "_" + std::to_string(s.label_index);
}

}  // namespace detail

/// Layout: `<dir>/manifest.json` plus `<dir>/<class>/<scene>_<label>.{bin,png}`.
inline void save_database(const GtDatabase& db, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [cls, samples] : db.entries) {
    if (samples.empty()) continue;
    fs::create_directories(dir / cls, ec);
    if (ec) throw IoError("cannot create " + (dir / cls).string() + ": " + ec.message());
    for (const auto& s : samples) {
      const std::string stem = detail::object_stem(s);
      const std::string points_rel = cls + "/" + stem + ".bin";
      const std::string patch_rel = cls + "/" + stem + ".png";
      const auto point_bytes = encode_point_cloud(PointCloud{s.points});
      const auto patch_bytes = encode_png(s.patch);
      write_bytes(dir / points_rel, point_bytes);
      write_bytes(dir / patch_rel, patch_bytes);
      entries.push_back({
          {"class", cls},
          {"source_scene", s.source_scene},
          {"label_index", s.label_index},
          {"label", detail::label_to_json(s.label)},
          {"patch_box",
           {s.patch_box.x1, s.patch_box.y1, s.patch_box.x2, s.patch_box.y2, s.patch_box.depth}},
          {"points_file", points_rel},
          {"patch_file", patch_rel},
          {"num_points", s.num_points()},
          {"points_crc32", crc32_of(point_bytes)},
          {"patch_crc32", crc32_of(patch_bytes)},
      });
    }
  }
  const nlohmann::json manifest{{"version", kManifestVersion}, {"entries", entries}};
  write_text(dir / kManifestName, manifest.dump(2) + "\n");
}

inline GtDatabase load_database(const std::filesystem::path& dir) {
  const auto manifest_path = dir / kManifestName;
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_text(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(manifest_path, "", e.what());
  }
  if (manifest.value("version", 0) != kManifestVersion) {
    throw ParseError(manifest_path, "version", "unsupported manifest version");
  }
  GtDatabase db;
  std::size_t index = 0;
  for (const auto& e : manifest.at("entries")) {
    const std::string where = "entry " + std::to_string(index++);
    try {
      ObjectSample s;
      s.source_scene = e.at("source_scene").get<std::string>();
      s.label_index = e.at("label_index").get<std::size_t>();
      s.label = detail::label_from_json(e.at("label"));
      s.box = box_from_label(s.label);
      const auto pb = e.at("patch_box").get<std::array<double, 5>>();
      s.patch_box = {pb[0], pb[1], pb[2], pb[3], pb[4]};
      const auto points_rel = e.at("points_file").get<std::string>();
      const auto patch_rel = e.at("patch_file").get<std::string>();
      const std::string name = where + " (" + points_rel + ")";
      if (!std::filesystem::exists(dir / points_rel)) {
        throw ParseError(manifest_path, name, "points file is missing");
      }
      if (!std::filesystem::exists(dir / patch_rel)) {
        throw ParseError(manifest_path, where + " (" + patch_rel + ")", "patch file is missing");
      }
      const auto point_bytes = read_bytes(dir / points_rel);
      const auto patch_bytes = read_bytes(dir / patch_rel);
      if (crc32_of(point_bytes) != e.at("points_crc32").get<std::uint32_t>()) {
        throw ParseError(manifest_path, name, "points checksum mismatch");
      }
      if (crc32_of(patch_bytes) != e.at("patch_crc32").get<std::uint32_t>()) {
        throw ParseError(manifest_path, where + " (" + patch_rel + ")", "patch checksum mismatch");
      }
      s.points = decode_point_cloud(point_bytes, dir / points_rel).points;
      s.patch = decode_png(patch_bytes, dir / patch_rel);
      if (s.num_points() != e.at("num_points").get<std::size_t>()) {
        throw ParseError(manifest_path, name, "point count disagrees with manifest");
      }
      if (s.patch.width != static_cast<std::size_t>(s.patch_box.width()) ||
          s.patch.height != static_cast<std::size_t>(s.patch_box.height())) {
        throw ParseError(manifest_path, where, "patch size disagrees with patch_box");
      }
      db.entries[e.at("class").get<std::string>()].push_back(std::move(s));
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(manifest_path, where, ex.what());
    }
  }
  return db;
}

}  // namespace occdistill::io

#endif  // OCCDISTILL_IO_DATABASE_HPP
