#pragma once

#include <stdexcept>
#include <string>

namespace kacld {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the mathematical domain of the operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The large-deviation regime is undefined because E[L^{2a}+R^{2a}] is infinite.
class RegimeUnavailable : public Error {
 public:
  using Error::Error;
};

/// The requested operation needs metadata the object does not carry.
class Unsupported : public Error {
 public:
  using Error::Error;
};

}  // namespace kacld
