#pragma once

#include <stdexcept>
#include <string>

namespace nsshape {

/// Raised for degenerate or non-simple shape descriptions.
class InvalidShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a direct factorization meets a zero (or negligible) pivot.
class SingularSystemError : public std::runtime_error {
 public:
  SingularSystemError(const std::string& what, long pivot)
      : std::runtime_error(what + " (pivot " + std::to_string(pivot) + ")"), pivot_(pivot) {}
  long pivot() const noexcept { return pivot_; }

 private:
  long pivot_;
};

/// Newton iteration ran out of iterations.
class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(const std::string& what, double last_ratio)
      : std::runtime_error(what), last_ratio_(last_ratio) {}
  double last_ratio() const noexcept { return last_ratio_; }

 private:
  double last_ratio_;
};

/// Configuration did not pass validation; names the offending field.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(const std::string& field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nsshape
