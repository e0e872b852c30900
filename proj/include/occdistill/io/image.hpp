#ifndef OCCDISTILL_IO_IMAGE_HPP
#define OCCDISTILL_IO_IMAGE_HPP

#include <png.h>

#include <array>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "occdistill/error.hpp"
#include "occdistill/io/file.hpp"

namespace occdistill {

/// 8-bit RGB image, rows top to bottom, interleaved channels.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(std::size_t w, std::size_t h) : width(w), height(h), rgb(w * h * 3, 0) {}

  std::uint8_t* pixel(std::size_t x, std::size_t y) { return &rgb[(y * width + x) * 3]; }
  const std::uint8_t* pixel(std::size_t x, std::size_t y) const {
    return &rgb[(y * width + x) * 3];
  }

  friend bool operator==(const Image&, const Image&) = default;
};

namespace io {

namespace detail {

struct PngImageGuard {
  png_image image{};
  PngImageGuard() { image.version = PNG_IMAGE_VERSION; }
  ~PngImageGuard() { png_image_free(&image); }
  PngImageGuard(const PngImageGuard&) = delete;
  PngImageGuard& operator=(const PngImageGuard&) = delete;
};

}  // namespace detail

inline Image decode_png(std::span<const std::uint8_t> bytes,
                        const std::filesystem::path& origin) {
  detail::PngImageGuard g;
  if (!png_image_begin_read_from_memory(&g.image, bytes.data(), bytes.size())) {
    throw ParseError(origin, "", std::string("invalid PNG: ") + g.image.message);
  }
  // The simplified API reports the file's native layout before conversion.
  if (g.image.format != PNG_FORMAT_RGB) {
    const bool linear = (g.image.format & PNG_FORMAT_FLAG_LINEAR) != 0;
    throw ParseError(origin, "",
                     linear ? "unsupported PNG bit depth (only 8-bit RGB is accepted)"
                            : "unsupported PNG colour type (only 8-bit RGB is accepted)");
  }
  Image img(g.image.width, g.image.height);
  if (!png_image_finish_read(&g.image, nullptr, img.rgb.data(), 0, nullptr)) {
    throw ParseError(origin, "", std::string("PNG decode failed: ") + g.image.message);
  }
  return img;
}

inline Image read_image(const std::filesystem::path& path) {
  return decode_png(read_bytes(path), path);
}

inline std::vector<std::uint8_t> encode_png(const Image& img) {
  if (img.rgb.size() != img.width * img.height * 3) {
    throw ConsistencyError("image buffer does not match its dimensions");
  }
  detail::PngImageGuard g;
  g.image.width = static_cast<png_uint_32>(img.width);
  g.image.height = static_cast<png_uint_32>(img.height);
  g.image.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&g.image, nullptr, &size, 0, img.rgb.data(), 0,
                                 nullptr)) {
    throw IoError(std::string("PNG encode failed: ") + g.image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&g.image, out.data(), &size, 0, img.rgb.data(), 0,
                                 nullptr)) {
    throw IoError(std::string("PNG encode failed: ") + g.image.message);
  }
  out.resize(size);
  return out;
}

inline void write_image(const Image& img, const std::filesystem::path& path) {
  write_bytes(path, encode_png(img));
}

}  // namespace io
}  // namespace occdistill

#endif  // OCCDISTILL_IO_IMAGE_HPP
