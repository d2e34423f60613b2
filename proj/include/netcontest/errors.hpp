#pragma once

#include <stdexcept>
#include <string>

namespace netcontest {

/// Broad failure classes; the CLI maps these onto exit codes.
enum class ErrorClass {
  kInput,     // malformed or invalid caller-supplied data
  kNumerical, // solver, search or certificate failures
  kIO,
};

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual ErrorClass error_class() const noexcept { return ErrorClass::kInput; }
  virtual const char* kind() const noexcept { return "error"; }
};

#define NETCONTEST_DEFINE_ERROR(Name, Class)                                  \
  class Name : public Error {                                                 \
   public:                                                                    \
    explicit Name(const std::string& what) : Error(what) {}                   \
    ErrorClass error_class() const noexcept override { return Class; }        \
    const char* kind() const noexcept override { return #Name; }              \
  };

NETCONTEST_DEFINE_ERROR(ParseError, ErrorClass::kInput)
NETCONTEST_DEFINE_ERROR(IndexError, ErrorClass::kInput)
NETCONTEST_DEFINE_ERROR(DomainError, ErrorClass::kInput)
NETCONTEST_DEFINE_ERROR(ShapeError, ErrorClass::kInput)
NETCONTEST_DEFINE_ERROR(PreconditionError, ErrorClass::kInput)
NETCONTEST_DEFINE_ERROR(TopologyError, ErrorClass::kInput)
NETCONTEST_DEFINE_ERROR(HypothesisError, ErrorClass::kInput)
NETCONTEST_DEFINE_ERROR(BoundaryError, ErrorClass::kInput)
NETCONTEST_DEFINE_ERROR(ControlError, ErrorClass::kInput)
NETCONTEST_DEFINE_ERROR(DegenerateBudgetError, ErrorClass::kInput)
NETCONTEST_DEFINE_ERROR(SingularSystemError, ErrorClass::kNumerical)
NETCONTEST_DEFINE_ERROR(MismatchError, ErrorClass::kNumerical)
NETCONTEST_DEFINE_ERROR(CertificateError, ErrorClass::kNumerical)
NETCONTEST_DEFINE_ERROR(SearchExhaustedError, ErrorClass::kNumerical)
NETCONTEST_DEFINE_ERROR(IOError, ErrorClass::kIO)

#undef NETCONTEST_DEFINE_ERROR

/// Names the offending field, e.g. "budgets[2]".
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }
  const char* kind() const noexcept override { return "ValidationError"; }

 private:
  std::string field_;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double best_residual, int iterations)
      : Error(what + " (best residual " + std::to_string(best_residual) + " after " +
              std::to_string(iterations) + " iterations)"),
        message_(what),
        best_residual_(best_residual),
        iterations_(iterations) {}

  /// Same failure with extra context appended to the message.
  ConvergenceError with_context(const std::string& context) const {
    return ConvergenceError(message_ + " " + context, best_residual_, iterations_);
  }
  ErrorClass error_class() const noexcept override { return ErrorClass::kNumerical; }
  const char* kind() const noexcept override { return "ConvergenceError"; }
  double best_residual() const noexcept { return best_residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  std::string message_;
  double best_residual_;
  int iterations_;
};

/// Replicator step would drive a coordinate negative; carries the smallest beta that works.
class BetaTooSmallError : public Error {
 public:
  BetaTooSmallError(double beta, double min_admissible)
      : Error("beta " + std::to_string(beta) + " too small; need beta > " +
              std::to_string(min_admissible)),
        min_admissible_(min_admissible) {}
  const char* kind() const noexcept override { return "BetaTooSmallError"; }
  double min_admissible() const noexcept { return min_admissible_; }

 private:
  double min_admissible_;
};

}  // namespace netcontest
