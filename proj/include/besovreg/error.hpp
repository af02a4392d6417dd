#pragma once

#include <stdexcept>
#include <string>

namespace besovreg {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A documented precondition of an operation was violated.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// A requested size exceeds the configured capacity limit.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// The discrete Gram matrix is (numerically) singular.
class RankDeficiencyError : public Error {
 public:
  using Error::Error;
};

// An argument lies outside the mathematical domain of the operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Requested projection level exceeds n - r.
class LevelTooDeepError : public Error {
 public:
  using Error::Error;
};

// A randomized construction ran out of its draw budget.
class BudgetError : public Error {
 public:
  using Error::Error;
};

class QuadratureError : public Error {
 public:
  using Error::Error;
};

}  // namespace besovreg
