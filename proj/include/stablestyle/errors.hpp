#pragma once

#include <stdexcept>
#include <string>

namespace sst {

// Error taxonomy shared by every module. The C API maps each class onto a
// status code; the CLI maps validation-type failures to exit 1 and runtime
// failures to exit 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad argument or incompatible shapes.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Malformed file contents (bad magic, truncated payload, unsupported variant).
class FormatError : public Error {
 public:
  using Error::Error;
};

// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf produced by an op, or an optimizer diverged.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Operation invoked in the wrong state (e.g. backward twice).
class StateError : public Error {
 public:
  using Error::Error;
};

}  // namespace sst
