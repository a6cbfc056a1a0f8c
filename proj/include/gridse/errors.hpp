#pragma once

#include <stdexcept>
#include <string>

namespace gridse {

/// Raised for malformed or inconsistent case-file input.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a network model violates a structural invariant.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for invalid measurement data or references.
class MeasurementError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an estimation problem cannot be posed (e.g. no anchor).
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gridse
