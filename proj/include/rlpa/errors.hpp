#pragma once

#include <stdexcept>
#include <string>

namespace rlpa {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed configuration, unknown keys, unreadable files. CLI exit code 1.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Argument dimensions do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Failures of the statistical method itself (empty windows, unusable nets,
/// no valid variance estimate). CLI exit code 2.
class MethodError : public Error {
 public:
  using Error::Error;
};

class EmptyWindow : public MethodError {
 public:
  EmptyWindow() : MethodError("no sample point falls inside the kernel window") {}
  using MethodError::MethodError;
};

class EmptyInput : public MethodError {
 public:
  EmptyInput() : MethodError("empty input") {}
};

class AllInvalid : public MethodError {
 public:
  AllInvalid() : MethodError("every candidate has a degenerate variance denominator") {}
  using MethodError::MethodError;
};

class NetEmpty : public MethodError {
 public:
  using MethodError::MethodError;
};

class NetUnusable : public MethodError {
 public:
  using MethodError::MethodError;
};

class QuadratureFailure : public MethodError {
 public:
  using MethodError::MethodError;
};

class NoBracket : public MethodError {
 public:
  using MethodError::MethodError;
};

namespace detail {

inline void require_same_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": dimension " + std::to_string(a) +
                         " does not match " + std::to_string(b));
  }
}

}  // namespace detail

}  // namespace rlpa
