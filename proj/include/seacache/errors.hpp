#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace seacache {

// Precondition violations on arguments (shapes, ranges, flags).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Timestep or element index outside the valid range.
class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// A gain vector that cannot be normalized (all zeros).
class DegenerateFilter : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An analysis asked for data the input does not carry, e.g. output features
// on an input-only trajectory.
class CapabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed SEATRAJ bytes. Carries the byte offset where decoding failed.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace seacache
