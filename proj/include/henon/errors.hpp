#pragma once

#include <stdexcept>
#include <string>

namespace henon {

// Base for every error raised by the library.
class HenonError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed files, invalid parameters, violated preconditions.
class InvalidInput : public HenonError {
 public:
  using HenonError::HenonError;
};

// A render plane that does not name two distinct real coordinates.
class InvalidPlane : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class DivisionByIntervalContainingZero : public HenonError {
 public:
  using HenonError::HenonError;
};

// An enclosure grew wider than the caller's budget.
class PrecisionExhausted : public HenonError {
 public:
  using HenonError::HenonError;
};

// A certified output failed independent re-verification. Always a defect.
class VerificationFailure : public HenonError {
 public:
  using HenonError::HenonError;
};

// Log or file content failed integrity checks.
class CorruptLog : public HenonError {
 public:
  using HenonError::HenonError;
};

// A semi-algorithm could not decide at the current precision or budget.
class Inconclusive : public HenonError {
 public:
  using HenonError::HenonError;
};

// A semi-algorithm did not halt within its configured budget.
class BudgetExhausted : public HenonError {
 public:
  using HenonError::HenonError;
};

// No positive parameter radius passed the inflated re-verification.
class ZeroRadius : public Inconclusive {
 public:
  using Inconclusive::Inconclusive;
};

}  // namespace henon
