#pragma once

#include <stdexcept>
#include <string>

namespace necklace {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two graph functions (or a function and an operator) live on different grids.
class GridMismatch : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation (negative lambda, even kappa, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Root bracket did not contain a sign change.
class BracketFailure : public Error {
 public:
  using Error::Error;
};

/// A shifted operator L_k has an eigenvalue within pivot tolerance of zero.
class DiscreteResonance : public Error {
 public:
  using Error::Error;
};

class CertificationFailure : public Error {
 public:
  using Error::Error;
};

class ConvergenceFailure : public Error {
 public:
  using Error::Error;
};

/// Malformed input file.
class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace necklace
