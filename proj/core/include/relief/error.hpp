#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace relief {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  /// Short machine-readable category, e.g. "format" or "dimension".
  virtual const char* kind() const noexcept { return "error"; }
};

/// A file did not parse as the declared format. `offset` is the byte
/// position at which parsing stopped.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }
  const char* kind() const noexcept override { return "format"; }

 private:
  std::size_t offset_;
};

class DimensionError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "dimension"; }
};

/// Raised when a grid violates a value invariant (non-finite sample,
/// out-of-range channel, non-unit normal).
class InvariantError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "invariant"; }
};

/// One or more pixels cannot be turned into a valid normal.
class DegeneratePixelError : public Error {
 public:
  DegeneratePixelError(const std::string& what,
                       std::vector<std::pair<std::size_t, std::size_t>> pixels);
  /// (x, y) coordinates of the offending pixels, capped at the first 64.
  const std::vector<std::pair<std::size_t, std::size_t>>& pixels() const noexcept {
    return pixels_;
  }
  const char* kind() const noexcept override { return "degenerate"; }

 private:
  std::vector<std::pair<std::size_t, std::size_t>> pixels_;
};

class IoError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "io"; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "config"; }
};

/// A metric has no well-defined value for the given input.
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "undefined-metric"; }
};

}  // namespace relief
