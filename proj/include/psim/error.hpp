#pragma once

#include <stdexcept>
#include <string>

namespace psim {

// Exception families map one-to-one onto the CLI exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Dimension, frame-count or shape contract violated.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class ModeError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint blob does not match its recorded digest.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

/// NaN or Inf produced inside the network engine.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace psim
