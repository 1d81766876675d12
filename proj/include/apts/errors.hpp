#pragma once

#include <stdexcept>
#include <string>

namespace apts {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vector or matrix lengths disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Index out of range.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Operation called in the wrong order (e.g. backward before forward).
class StateError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// Malformed binary or text input.
class FormatError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// CSV files whose epoch grids cannot be aligned.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

/// A subdomain worker failed; carries the subdomain index.
class SubdomainError : public Error {
 public:
  SubdomainError(std::size_t subdomain, const std::string& what)
      : Error("subdomain " + std::to_string(subdomain) + ": " + what), subdomain_(subdomain) {}

  std::size_t subdomain() const noexcept { return subdomain_; }

 private:
  std::size_t subdomain_;
};

}  // namespace apts
