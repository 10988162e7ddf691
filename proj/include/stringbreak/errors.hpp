#pragma once

#include <stdexcept>
#include <string>

namespace stringbreak {

// Root of the error hierarchy. Each subclass maps to one CLI exit status.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid user input: bad config keys, kernel parameters outside their domain,
// malformed site lists. CLI exit status 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Request exceeds a configured size limit (Hilbert-space dimension, enumeration).
class ResourceError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Numerical failure: eigensolver or propagator did not converge, no bracket,
// degenerate denominators. CLI exit status 2.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class SolverError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class PropagationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class BracketError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateLevelError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NotFoundError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace stringbreak
