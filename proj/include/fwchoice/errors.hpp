#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fwc {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable or unwritable file.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed input line. Carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Caller violated a documented precondition (dimension mismatch, empty set).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration (unknown group name, probability out of range, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Training data contains NaN/inf or labels outside {0,1}.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Maximum-likelihood estimate does not exist (single class or separable data).
class NonIdentifiableError : public Error {
 public:
  using Error::Error;
};

/// A choice instance refers to users or events missing from the graph or cascade.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

}  // namespace fwc
