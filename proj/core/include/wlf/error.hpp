#pragma once

#include <stdexcept>
#include <string>

namespace wlf {

// Base class for every error raised by the library. The CLI maps the
// concrete subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A frame violates its data-model invariants (non-finite coordinates,
// beam rows out of range, mismatched array lengths).
class InvalidFrameError : public Error {
 public:
  using Error::Error;
};

// A referenced file or directory does not exist or cannot be read.
class InputError : public Error {
 public:
  using Error::Error;
};

// A configuration value or JSON document is malformed.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Inputs that are individually valid but inconsistent with each other
// (length mismatch, unknown frame id).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Raised when an internal post-condition does not hold.
class InvariantError : public Error {
 public:
  using Error::Error;
};

class EmptySelectionError : public Error {
 public:
  using Error::Error;
};

}  // namespace wlf
