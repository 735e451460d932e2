#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lumen {

// Contract violation: bad arguments, mismatched dimensions, malformed configs.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed serialised data. Carries the byte offset where parsing stopped.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t byte_offset)
      : std::runtime_error(what + " (byte offset " +
                           std::to_string(byte_offset) + ")"),
        offset_(byte_offset) {}

  std::size_t byte_offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Fewer than two distinct 3D points, zero-radius balls and the like.
class DegenerateGeometry : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A gamma target that no exponent can reach (all-zero or all-one planes).
class UnreachableTarget : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Scatter matrix degenerate beyond regularisation.
class RankError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inconsistent retrieval protocol (overlapping sets, unresolvable ids, ...).
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lumen
