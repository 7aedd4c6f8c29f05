#pragma once

#include <stdexcept>
#include <string>

namespace ladder {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shape / dimension mismatch.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid model / sharding / run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// File format and parse failures.
class IoError : public Error {
 public:
  using Error::Error;
};

// Collective fabric failures (poisoned fabric, shutdown with pending ops).
class FabricError : public Error {
 public:
  using Error::Error;
};

}  // namespace ladder
