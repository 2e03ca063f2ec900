#pragma once

#include <stdexcept>
#include <string>

namespace qperc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user input: graph/kernel/configuration text, run parameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A computation would exceed a configured resource cap (block size, shape count).
class ResourceCapError : public Error {
 public:
  using Error::Error;
};

/// An internal consistency check failed (oracle mismatch, axiom violation).
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace qperc
