#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ope {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text (CSV, JSON).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Well-formed data that breaks a documented invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Bad configuration or option values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// The data lacks something an operation needs (e.g. full propensity rows).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

// A request exceeds a fixed resource cap (e.g. oracle enumeration size).
class ResourceError : public Error {
 public:
  using Error::Error;
};

// A theoretical formula was asked for on an instance that violates its premise.
class AssumptionError : public Error {
 public:
  using Error::Error;
};

}  // namespace ope
