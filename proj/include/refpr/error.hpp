#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace refpr {

enum class ErrorCode {
  kDimension = 1,
  kParameter,
  kDivergence,
  kParse,
  kFormat,
  kIo,
};

const char* to_string(ErrorCode code) noexcept;

/// Base of every exception thrown by the library. The code maps 1:1 onto the
/// C API status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& message)
      : Error(ErrorCode::kDimension, message) {}
};

class ParameterError : public Error {
 public:
  explicit ParameterError(const std::string& message)
      : Error(ErrorCode::kParameter, message) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t byte_offset)
      : Error(ErrorCode::kParse,
              message + " (at byte " + std::to_string(byte_offset) + ")"),
        reason_(message),
        byte_offset_(byte_offset) {}

  const std::string& reason() const noexcept { return reason_; }
  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::string reason_;
  std::size_t byte_offset_;
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& message)
      : Error(ErrorCode::kFormat, message) {}
};

class IoError : public Error {
 public:
  IoError(const std::string& message, const std::string& path)
      : Error(ErrorCode::kIo, message + ": " + path), path_(path) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Raised when an iterate or the reference stops being finite.
/// `layer` is the unrolled layer that produced the bad value, `sample` the
/// training/test sample index when known.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& message, std::optional<std::size_t> layer,
                  std::optional<std::size_t> sample = std::nullopt)
      : Error(ErrorCode::kDivergence, message), layer_(layer), sample_(sample) {}

  std::optional<std::size_t> layer() const noexcept { return layer_; }
  std::optional<std::size_t> sample() const noexcept { return sample_; }

 private:
  std::optional<std::size_t> layer_;
  std::optional<std::size_t> sample_;
};

}  // namespace refpr
