#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pgnn {

// Base of every error thrown by the library. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes or dimensions that do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Run-file or argument problems.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input files, gaps that cannot be repaired, bad model files.
class DataError : public Error {
 public:
  using Error::Error;
};

// Non-finite losses or values during training and evaluation.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, std::size_t epoch)
      : Error(what + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}
  explicit NumericError(const std::string& what) : Error(what) {}

  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_ = 0;
};

}  // namespace pgnn
