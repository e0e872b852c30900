// Shared helpers for tests: temporary directories, tree hashing and KITTI
// dataset fixtures written to disk.
#pragma once

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "occdistill/cmaug/synthetic.hpp"
#include "occdistill/io/calib.hpp"
#include "occdistill/io/file.hpp"
#include "occdistill/io/image.hpp"
#include "occdistill/io/labels.hpp"
#include "occdistill/io/point_cloud.hpp"

namespace fixture {

namespace fs = std::filesystem;
using namespace occdistill;

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("occdistill-test-" + std::to_string(rd()) + "-" + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

inline std::string sha256_hex(const std::vector<std::uint8_t>& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
  std::ostringstream os;
  for (unsigned i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

/// Digest over every regular file below `root`: relative path and content
/// hash, in sorted path order.
inline std::string tree_sha256(const fs::path& root) {
  std::vector<std::string> lines;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    lines.push_back(fs::relative(e.path(), root).generic_string() + " " +
                    sha256_hex(io::read_bytes(e.path())));
  }
  std::sort(lines.begin(), lines.end());
  std::string joined;
  for (const auto& l : lines) joined += l + "\n";
  return sha256_hex({joined.begin(), joined.end()});
}

/// Writes a KITTI-layout dataset of synthetic scenes and a split file.
/// Scenes listed in `unlabelled` get no label_2 file.
inline void write_dataset(const fs::path& root, const std::vector<cmaug::Scene>& scenes,
                          const std::vector<std::string>& unlabelled = {}) {
  for (const char* d : {"velodyne", "image_2", "calib", "label_2"}) fs::create_directories(root / d);
  std::string split;
  for (const auto& s : scenes) {
    io::write_point_cloud(s.cloud, root / "velodyne" / (s.id + ".bin"));
    io::write_image(s.image, root / "image_2" / (s.id + ".png"));
    io::write_calib(s.calib, root / "calib" / (s.id + ".txt"));
    if (std::find(unlabelled.begin(), unlabelled.end(), s.id) == unlabelled.end()) {
      io::write_labels(s.labels, root / "label_2" / (s.id + ".txt"));
    }
    split += s.id + "\n";
  }
  io::write_text(root / "split.txt", split);
}

inline std::vector<cmaug::Scene> synthetic_scenes(std::uint64_t seed, std::size_t n,
                                                  const std::string& prefix = "",
                                                  const cmaug::synthetic::SceneOptions& opt = {}) {
  std::vector<cmaug::Scene> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::ostringstream id;
    id << prefix << std::setw(6) << std::setfill('0') << i;
    out.push_back(cmaug::synthetic::make_scene(seed, id.str(), opt));
  }
  return out;
}

}  // namespace fixture
