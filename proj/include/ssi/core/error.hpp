#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ssi {

// Bad shapes, ranges or configuration passed to a library call.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed on-disk data. `offset` is the byte position where decoding failed.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

// A checkpoint whose shape table does not match the requested architecture.
class CheckpointIncompatible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Signal too short for an analysis that needs a minimum number of frames.
class TooShortError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// NaN or Inf detected in a computation that must stay finite.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ssi
