#pragma once

#include <stdexcept>
#include <string>

namespace nlo {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A constructor or operation received parameters outside its domain.
/// The message names the violated condition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A numerical sub-step (bracketing, bisection) could not complete.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

/// A request would exceed a configured resource budget.
class ResourceLimit : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace nlo
