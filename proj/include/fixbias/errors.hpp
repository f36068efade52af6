#pragma once

#include <stdexcept>
#include <string>

namespace fixbias {

/// Malformed input: dimension or grid mismatch, bad sizes, non-finite values.
struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Evaluation point outside the domain of a function.
struct OutOfDomain : std::domain_error {
  using std::domain_error::domain_error;
};

/// A configuration that is well-formed but unsafe to run, e.g. a learning
/// rate at or above the stability bound.
struct RejectedConfig : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Iterative solver gave up before reaching its threshold.
struct ConvergenceFailure : std::runtime_error {
  ConvergenceFailure(const std::string& what, double achieved)
      : std::runtime_error(what), achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

/// Training loss kept growing; raised by the divergence detector.
struct Divergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace fixbias
