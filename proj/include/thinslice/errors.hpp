#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace thinslice {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed container file. Carries the byte offset where parsing failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Invalid graph description.
class SpecError : public Error {
 public:
  using Error::Error;
};

/// Non-finite parameters, diverging training.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Inputs inconsistent with the requested configuration (e.g. a missing flow).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace thinslice
