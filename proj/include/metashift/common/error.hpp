#pragma once

#include <stdexcept>
#include <string>

namespace metashift {

// Exception hierarchy. The CLI maps each family onto a process exit code.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad argument, shape, label or configuration.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A required upstream artifact (archive, checkpoint, CSV) is absent.
class MissingArtifactError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or a degenerate numerical input.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed file: bad magic, version mismatch, truncation.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace metashift
