#ifndef OCCDISTILL_ERROR_HPP
#define OCCDISTILL_ERROR_HPP

#include <filesystem>
#include <stdexcept>
#include <string>

namespace occdistill {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input data. `where()` carries the file and a location such as
/// "byte 48" or "line 3".
class ParseError : public Error {
 public:
  ParseError(const std::filesystem::path& file, std::string location,
             const std::string& what)
      : Error(file.string() + (location.empty() ? "" : ":" + location) + ": " +
              what),
        file_(file),
        location_(std::move(location)) {}

  const std::filesystem::path& file() const noexcept { return file_; }
  const std::string& where() const noexcept { return location_; }

 private:
  std::filesystem::path file_;
  std::string location_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Tensors or masks whose shapes disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An internal invariant was broken; indicates a bug rather than bad data.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace occdistill

#endif  // OCCDISTILL_ERROR_HPP
