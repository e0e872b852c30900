#ifndef OCCDISTILL_IO_NPY_HPP
#define OCCDISTILL_IO_NPY_HPP

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "occdistill/error.hpp"
#include "occdistill/io/file.hpp"
#include "occdistill/io/text.hpp"

namespace occdistill {

/// Dense float32 tensor of shape (width, height) or (width, height, channels),
/// row-major. Element (i, j, c) lives at offset (i * height + j) * channels + c.
class DenseTensor {
 public:
  DenseTensor() = default;

  DenseTensor(std::size_t width, std::size_t height, std::size_t channels)
      : shape_{width, height, channels}, data_(width * height * channels, 0.f) {}

  /// Rank-2 tensor; behaves as a single-channel rank-3 one for indexing.
  static DenseTensor matrix(std::size_t width, std::size_t height) {
    DenseTensor t;
    t.shape_ = {width, height};
    t.data_.assign(width * height, 0.f);
    return t;
  }

  static DenseTensor from_shape(std::vector<std::size_t> shape,
                                std::vector<float> data) {
    if (shape.size() != 2 && shape.size() != 3) {
      throw DimensionError("tensor rank must be 2 or 3");
    }
    std::size_t n = 1;
    for (auto s : shape) n *= s;
    if (n != data.size()) {
      throw DimensionError("tensor data length " + std::to_string(data.size()) +
                           " does not match shape volume " + std::to_string(n));
    }
    DenseTensor t;
    t.shape_ = std::move(shape);
    t.data_ = std::move(data);
    return t;
  }

  std::size_t rank() const noexcept { return shape_.size(); }
  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t width() const noexcept { return shape_.empty() ? 0 : shape_[0]; }
  std::size_t height() const noexcept { return shape_.size() < 2 ? 0 : shape_[1]; }
  std::size_t channels() const noexcept { return shape_.size() == 3 ? shape_[2] : 1; }
  std::size_t size() const noexcept { return data_.size(); }

  std::size_t offset(std::size_t i, std::size_t j, std::size_t c = 0) const noexcept {
    return (i * height() + j) * channels() + c;
  }
  float at(std::size_t i, std::size_t j, std::size_t c = 0) const {
    return data_[offset(i, j, c)];
  }
  float& at(std::size_t i, std::size_t j, std::size_t c = 0) {
    return data_[offset(i, j, c)];
  }

  std::span<const float> data() const noexcept { return data_; }
  std::span<float> data() noexcept { return data_; }

  std::string shape_string() const {
    std::string s = "(";
    for (std::size_t k = 0; k < shape_.size(); ++k) {
      s += (k ? ", " : "") + std::to_string(shape_[k]);
    }
    return s + ")";
  }

  friend bool operator==(const DenseTensor&, const DenseTensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<float> data_;
};

namespace io {

namespace detail {

constexpr char kNpyMagic[] = "\x93NUMPY";

/// Returns the text following `'key':` in an NPY header dict.
inline std::string_view npy_field(std::string_view header, std::string_view key,
                                  const std::filesystem::path& origin) {
  const std::string quoted = "'" + std::string(key) + "'";
  const auto pos = header.find(quoted);
  if (pos == std::string_view::npos) {
    throw ParseError(origin, "header", "missing '" + std::string(key) + "'");
  }
  auto rest = header.substr(pos + quoted.size());
  const auto colon = rest.find(':');
  if (colon == std::string_view::npos) {
    throw ParseError(origin, "header", "malformed entry for '" + std::string(key) + "'");
  }
  rest = rest.substr(colon + 1);
  while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
  return rest;
}

}  // namespace detail

/// Decodes NPY format version 1.0, dtype '<f4', C order, rank 2 or 3.
inline DenseTensor decode_npy(std::span<const std::uint8_t> bytes,
                              const std::filesystem::path& origin) {
  if (bytes.size() < 10 || std::memcmp(bytes.data(), detail::kNpyMagic, 6) != 0) {
    throw ParseError(origin, "byte 0", "bad NPY magic");
  }
  if (bytes[6] != 1 || bytes[7] != 0) {
    throw ParseError(origin, "byte 6",
                     "unsupported NPY version " + std::to_string(bytes[6]) + "." +
                         std::to_string(bytes[7]));
  }
  const std::size_t header_len = bytes[8] | (std::size_t{bytes[9]} << 8);
  if (10 + header_len > bytes.size()) {
    throw ParseError(origin, "byte 8", "header length exceeds file size");
  }
  const std::string_view header(reinterpret_cast<const char*>(bytes.data() + 10),
                                header_len);

  auto descr = detail::npy_field(header, "descr", origin);
  if (!descr.starts_with("'<f4'")) {
    const auto end = descr.find(',');
    throw ParseError(origin, "header",
                     "unsupported dtype " + std::string(descr.substr(0, end)) +
                         " (only '<f4' is accepted)");
  }
  const auto fortran = detail::npy_field(header, "fortran_order", origin);
  if (fortran.starts_with("True")) {
    throw ParseError(origin, "header", "Fortran-ordered arrays are not supported");
  }
  if (!fortran.starts_with("False")) {
    throw ParseError(origin, "header", "malformed fortran_order");
  }
  auto shape_text = detail::npy_field(header, "shape", origin);
  if (shape_text.empty() || shape_text.front() != '(') {
    throw ParseError(origin, "header", "malformed shape");
  }
  const auto close = shape_text.find(')');
  if (close == std::string_view::npos) {
    throw ParseError(origin, "header", "malformed shape");
  }
  std::vector<std::size_t> shape;
  std::string_view dims_text = shape_text.substr(1, close - 1);
  std::size_t start = 0;
  while (start <= dims_text.size()) {
    auto comma = dims_text.find(',', start);
    if (comma == std::string_view::npos) comma = dims_text.size();
    const auto tok = text::split_ws(dims_text.substr(start, comma - start));
    if (tok.size() == 1) {
      const auto v = text::parse_int(tok[0]);
      if (!v || *v < 0) throw ParseError(origin, "header", "malformed shape entry");
      shape.push_back(static_cast<std::size_t>(*v));
    } else if (!tok.empty()) {
      throw ParseError(origin, "header", "malformed shape entry");
    }
    start = comma + 1;
  }
  if (shape.size() != 2 && shape.size() != 3) {
    throw ParseError(origin, "header",
                     "tensor rank must be 2 or 3, got " + std::to_string(shape.size()));
  }
  std::size_t count = 1;
  for (auto s : shape) count *= s;
  const std::size_t payload = bytes.size() - 10 - header_len;
  if (payload != count * sizeof(float)) {
    throw ParseError(origin, "byte " + std::to_string(10 + header_len),
                     "payload holds " + std::to_string(payload) + " bytes, shape needs " +
                         std::to_string(count * sizeof(float)));
  }
  std::vector<float> data(count);
  if (count) std::memcpy(data.data(), bytes.data() + 10 + header_len, payload);
  return DenseTensor::from_shape(std::move(shape), std::move(data));
}

inline DenseTensor read_tensor(const std::filesystem::path& path) {
  return decode_npy(read_bytes(path), path);
}

/// Encodes exactly as numpy.save does for the same array, so files round-trip
/// byte for byte.
inline std::vector<std::uint8_t> encode_npy(const DenseTensor& t) {
  std::string dict = "{'descr': '<f4', 'fortran_order': False, 'shape': (";
  for (std::size_t k = 0; k < t.shape().size(); ++k) {
    dict += std::to_string(t.shape()[k]) + ", ";
  }
  if (t.rank() > 1) dict.resize(dict.size() - 2);  // numpy only keeps the comma for 1-tuples
  dict += "), }";
  // Pad with spaces so the payload starts on a 64-byte boundary.
  const std::size_t unpadded = 10 + dict.size() + 1;
  const std::size_t padding = (64 - unpadded % 64) % 64;
  dict.append(padding, ' ');
  dict += '\n';

  std::vector<std::uint8_t> out(10 + dict.size() + t.size() * sizeof(float));
  std::memcpy(out.data(), detail::kNpyMagic, 6);
  out[6] = 1;
  out[7] = 0;
  out[8] = static_cast<std::uint8_t>(dict.size() & 0xff);
  out[9] = static_cast<std::uint8_t>(dict.size() >> 8);
  std::memcpy(out.data() + 10, dict.data(), dict.size());
  if (t.size()) {
    std::memcpy(out.data() + 10 + dict.size(), t.data().data(), t.size() * sizeof(float));
  }
  return out;
}

inline void write_tensor(const DenseTensor& t, const std::filesystem::path& path) {
  write_bytes(path, encode_npy(t));
}

}  // namespace io
}  // namespace occdistill

#endif  // OCCDISTILL_IO_NPY_HPP
