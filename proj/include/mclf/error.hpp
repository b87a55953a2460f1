#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mclf {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape or rank disagreement between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An operation produced NaN or Inf where its contract promises finite values.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value (channel counts, scale counts, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Scene description that cannot be rendered.
class SpecError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed file content. Carries the byte offset where parsing failed.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace mclf
