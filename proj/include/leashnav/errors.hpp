#pragma once

#include <stdexcept>
#include <string>

namespace leashnav {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent caller input (bad files, violated preconditions).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

class ParseError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class EmptyData : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class DegenerateData : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class MissingChannel : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

// Normalization of a zero-length commanded velocity was requested.
class ZeroSpeed : public Error {
 public:
  using Error::Error;
};

// A hybrid reset was applied outside its guard set.
class GuardViolation : public Error {
 public:
  using Error::Error;
};

// State left the finite range during integration.
class NonFinite : public Error {
 public:
  using Error::Error;
};

// Covariance left the PSD cone beyond the numerical guard.
class NonPSD : public Error {
 public:
  using Error::Error;
};

// Graph search exhausted the open set without reaching the goal region.
class NoPath : public Error {
 public:
  using Error::Error;
};

// No candidate trajectory satisfied the constraints within tolerance.
class Infeasible : public Error {
 public:
  using Error::Error;
};

}  // namespace leashnav
