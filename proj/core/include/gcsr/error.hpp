#pragma once

#include <stdexcept>
#include <string>

namespace gcsr {

// Input that breaks a documented precondition or file contract.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or missing on-disk artifact.
class FormatError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Matrix or vector dimensions that do not chain.
class ShapeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Failure that only shows up while computing: divergence, non-convergence,
// degenerate expert segments.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DivergenceError : public NumericError {
 public:
  DivergenceError(const std::string& what, int step) : NumericError(what), step_(step) {}
  int step() const noexcept { return step_; }

 private:
  int step_;
};

class NonConvergenceError : public NumericError {
 public:
  NonConvergenceError(const std::string& what, double residual)
      : NumericError(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class DegenerateSegmentError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace gcsr
