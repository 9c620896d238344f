#pragma once

#include <stdexcept>
#include <string>

namespace cfs {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Dimension or size mismatch between related objects.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A value violates a domain constraint (non-finite, out of range, ...).
class ValueError : public Error {
 public:
  using Error::Error;
};

/// The ranking model has no weights for the requested id.
class MissingModelError : public Error {
 public:
  using Error::Error;
};

/// A score is NaN and cannot be ranked.
class InvalidScoreError : public Error {
 public:
  using Error::Error;
};

/// A sequential environment was driven past its terminal step.
class StateError : public Error {
 public:
  using Error::Error;
};

/// A configuration file or parameter set is invalid.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A persisted file is corrupt or has an unsupported layout/version.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// The underlying stream could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A checkpoint does not match the expected version or shapes.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

/// Training diverged or produced non-finite quantities.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace cfs
