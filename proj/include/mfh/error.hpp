#pragma once

#include <stdexcept>
#include <string>

namespace mfh {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter lies outside its admissible range.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Input violates a structural precondition (empty lists, bad sizes, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Kernel evaluated exactly on its singular set.
class SingularEvaluation : public Error {
 public:
  using Error::Error;
};

/// Requested simulation exceeds the configured work budget.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

/// Path grid does not contain the points an estimator needs.
class GridMismatch : public Error {
 public:
  using Error::Error;
};

/// Estimator has nothing to fit (all-zero leaders, empty windows, ...).
class DegenerateEstimate : public Error {
 public:
  using Error::Error;
};

class InsufficientRank : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

/// The truncated far tail dominates a computed quantity.
class TruncationDominates : public Error {
 public:
  using Error::Error;
};

/// No sample falls inside a requested time window.
class EmptyWindow : public Error {
 public:
  using Error::Error;
};

class MalformedCsv : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace mfh
