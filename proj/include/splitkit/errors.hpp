#pragma once

#include <stdexcept>
#include <string>

namespace splitkit {

/// Raised when a computation cannot proceed for numerical reasons
/// (lost transversality, non-convergence, chart exit, overflow).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user input: malformed map specs and configs, bad parameters.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A point, stencil or trajectory left the coordinate chart.
class ChartError : public NumericalError {
 public:
  ChartError(const std::string& what, double time = 0.0) : NumericalError(what), time_(time) {}
  /// Flow time at which the exit happened (0 when not a flow).
  double time() const { return time_; }

 private:
  double time_;
};

}  // namespace splitkit
