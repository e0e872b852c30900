#ifndef OCCDISTILL_IO_FILE_HPP
#define OCCDISTILL_IO_FILE_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "occdistill/error.hpp"

namespace occdistill::io {

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  const auto size = static_cast<std::size_t>(in.tellg());
  std::vector<std::uint8_t> bytes(size);
  in.seekg(0);
  if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()),
                           static_cast<std::streamsize>(size))) {
    throw IoError("short read on " + path.string());
  }
  return bytes;
}

inline std::string read_text(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  return {bytes.begin(), bytes.end()};
}

inline void write_bytes(const std::filesystem::path& path,
                        std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed on " + path.string());
}

inline void write_text(const std::filesystem::path& path,
                       const std::string& text) {
  write_bytes(path, {reinterpret_cast<const std::uint8_t*>(text.data()),
                     text.size()});
}

}  // namespace occdistill::io

#endif  // OCCDISTILL_IO_FILE_HPP
