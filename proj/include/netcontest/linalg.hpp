#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "netcontest/errors.hpp"

namespace netcontest {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kConditionLimit = 1e12;

inline Vector to_vector(std::span<const double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) v[static_cast<Eigen::Index>(i)] = xs[i];
  return v;
}

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

/// Dense LU solve of A x = rhs; throws SingularSystemError above the condition limit.
inline Vector solve_checked(const Matrix& a, const Vector& rhs) {
  Eigen::PartialPivLU<Matrix> lu(a);
  const double rcond = lu.rcond();
  if (!(rcond > 0.0) || 1.0 / rcond >= kConditionLimit)
    throw SingularSystemError("linear system ill-conditioned (estimated condition " +
                              std::to_string(rcond > 0.0 ? 1.0 / rcond
                                                         : std::numeric_limits<double>::infinity()) +
                              ")");
  Vector x = lu.solve(rhs);
  if (!x.allFinite()) throw SingularSystemError("linear solve produced non-finite values");
  return x;
}

inline Matrix solve_checked(const Matrix& a, const Matrix& rhs) {
  Eigen::PartialPivLU<Matrix> lu(a);
  const double rcond = lu.rcond();
  if (!(rcond > 0.0) || 1.0 / rcond >= kConditionLimit)
    throw SingularSystemError("linear system ill-conditioned");
  Matrix x = lu.solve(rhs);
  if (!x.allFinite()) throw SingularSystemError("linear solve produced non-finite values");
  return x;
}

}  // namespace netcontest
