#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace gspot {

// Base for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Value outside its declared domain (pixel fields, symbol indices).
class RangeError : public Error {
 public:
  using Error::Error;
};

// Caller-supplied data violates a precondition.
class InputError : public Error {
 public:
  using Error::Error;
};

// Not a file of the expected kind (magic, version).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Structurally damaged data; carries the byte offset where decoding failed.
class CorruptStreamError : public Error {
 public:
  CorruptStreamError(const std::string& what, std::uint64_t offset)
      : Error(what + " at byte offset " + std::to_string(offset)), offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

class OrderingError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class UntrackedLimbError : public Error {
 public:
  using Error::Error;
};

}  // namespace gspot
