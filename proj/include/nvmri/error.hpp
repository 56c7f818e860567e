#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace nvmri {

/// Base for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

/// Field magnitude beyond the range where eigenstate labels stay unambiguous.
class FieldTooLargeError : public Error {
 public:
  using Error::Error;
};

/// Probe point closer to a wire axis than the thin-wire guard radius.
class DegeneratePointError : public Error {
 public:
  using Error::Error;
};

class WrongWireKindError : public Error {
 public:
  using Error::Error;
};

class EmptyGridError : public Error {
 public:
  using Error::Error;
};

class NonUniformAxisError : public Error {
 public:
  using Error::Error;
};

class WindowTooLongError : public Error {
 public:
  using Error::Error;
};

/// Trace too short to resolve the requested tone separation.
class UnderspecifiedWindowError : public Error {
 public:
  using Error::Error;
};

/// Least-squares fit that did not converge. Carries the best parameters seen.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, std::vector<double> best, double best_cost)
      : Error(what), best_parameters(std::move(best)), best_cost(best_cost) {}

  std::vector<double> best_parameters;
  double best_cost;
};

class InconsistentInputsError : public Error {
 public:
  using Error::Error;
};

class NotIdentifiableError : public Error {
 public:
  using Error::Error;
};

class InfeasibleAnchorError : public Error {
 public:
  using Error::Error;
};

class OrderingError : public Error {
 public:
  using Error::Error;
};

}  // namespace nvmri
