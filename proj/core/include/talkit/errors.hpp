#pragma once

#include <stdexcept>
#include <string>

namespace talkit {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Tensor/operand shapes do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// An operation was called outside its contract (non-scalar loss, empty
// reduction, degenerate input length, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value or unknown config key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A file does not match its expected format (bad magic, truncation,
// version mismatch, malformed record).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Dataset-level problems: missing files, inconsistent annotations,
// metrics that are undefined for the given ground truth.
class DataError : public Error {
 public:
  using Error::Error;
};

// The synthetic generator could not satisfy its packing constraints.
class GenerationError : public Error {
 public:
  using Error::Error;
};

// Non-finite values or failed numerical checks.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace talkit
