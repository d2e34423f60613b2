#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>

#include "netcontest/equilibrium.hpp"
#include "netcontest/errors.hpp"
#include "netcontest/instance.hpp"

namespace netcontest {

/// Line 1 - 2 - 3 where players 1 and 3 share the adversary 2. v1 is the
/// value of item (1,2), v2 the value of item (2,3).
struct ThreeNodeParams {
  double B1 = 0.0;
  double B2 = 0.0;
  double B3 = 0.0;
  double v1 = 0.0;
  double v2 = 0.0;
};

inline void validate(const ThreeNodeParams& p) {
  const std::pair<const char*, double> fields[] = {
      {"B1", p.B1}, {"B2", p.B2}, {"B3", p.B3}, {"v1", p.v1}, {"v2", p.v2}};
  for (auto [name, value] : fields) {
    if (!std::isfinite(value) || value <= 0.0) throw ValidationError(name, "must be positive");
  }
}

/// Players 0, 1, 2 with budgets (B1 - tau, B2, B3 + tau).
inline ContestInstance three_node_instance(const ThreeNodeParams& p, double tau = 0.0) {
  validate(p);
  return ContestInstance({p.B1 - tau, p.B2, p.B3 + tau}, {{0, 1, p.v1}, {1, 2, p.v2}});
}

struct Fraction {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Fraction make(std::int64_t num, std::int64_t den) {
    const std::int64_t g = std::gcd(num, den);
    if (g != 0) {
      num /= g;
      den /= g;
    }
    if (den < 0) {
      num = -num;
      den = -den;
    }
    return {num, den};
  }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const {
    return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
  }
};

struct ThreeNodeFeasibility {
  bool feasible = false;
  bool upper_holds = false;       // (B1+B2)^2/(B1 B3) > v1/v2
  bool lower_holds = false;       // v1/v2 > B1 B3/(B2+B3)^2
  bool separation_holds = false;  // B1 - B3 > 2 sqrt(v1/v2 B1 B3)
  double chain_margin = 0.0;       // min of the two chain gaps
  double separation_margin = 0.0;  // (B1 - B3) - 2 sqrt(v1/v2 B1 B3)
  bool exact = false;              // comparisons done in integer arithmetic
  // Present when exact.
  std::optional<Fraction> upper, ratio, lower, separation_lhs, separation_radicand;

  std::string chain_text() const {
    if (!exact) return {};
    return upper->str() + " > " + ratio->str() + " > " + lower->str();
  }
  std::string separation_text() const {
    if (!exact) return {};
    return separation_lhs->str() + " > 2*sqrt(" + separation_radicand->str() + ")";
  }
};

namespace detail {

inline std::optional<std::int64_t> as_small_integer(double x) {
  if (std::floor(x) != x || std::abs(x) > 1e6) return std::nullopt;
  return static_cast<std::int64_t>(x);
}

}  // namespace detail

/// Both conditions for a mutually beneficial transfer from player 1 to player 3.
inline ThreeNodeFeasibility three_node_feasible(const ThreeNodeParams& p) {
  validate(p);
  ThreeNodeFeasibility out;
  const double r = p.v1 / p.v2;
  const double upper = (p.B1 + p.B2) * (p.B1 + p.B2) / (p.B1 * p.B3);
  const double lower = p.B1 * p.B3 / ((p.B2 + p.B3) * (p.B2 + p.B3));
  out.chain_margin = std::min(upper - r, r - lower);
  out.separation_margin = (p.B1 - p.B3) - 2.0 * std::sqrt(r * p.B1 * p.B3);

  const auto b1 = detail::as_small_integer(p.B1);
  const auto b2 = detail::as_small_integer(p.B2);
  const auto b3 = detail::as_small_integer(p.B3);
  const auto v1 = detail::as_small_integer(p.v1);
  const auto v2 = detail::as_small_integer(p.v2);
  if (b1 && b2 && b3 && v1 && v2) {
    using Wide = __int128;
    const Wide B1 = *b1, B2 = *b2, B3 = *b3, V1 = *v1, V2 = *v2;
    out.exact = true;
    out.upper_holds = (B1 + B2) * (B1 + B2) * V2 > V1 * B1 * B3;
    out.lower_holds = V1 * (B2 + B3) * (B2 + B3) > V2 * B1 * B3;
    // B1 - B3 > 2 sqrt(v1 B1 B3 / v2)  <=>  B1 > B3 and v2 (B1 - B3)^2 > 4 v1 B1 B3.
    out.separation_holds = B1 > B3 && V2 * (B1 - B3) * (B1 - B3) > 4 * V1 * B1 * B3;
    out.upper = Fraction::make((*b1 + *b2) * (*b1 + *b2), *b1 * *b3);
    out.ratio = Fraction::make(*v1, *v2);
    out.lower = Fraction::make(*b1 * *b3, (*b2 + *b3) * (*b2 + *b3));
    out.separation_lhs = Fraction::make(*b1 - *b3, 1);
    out.separation_radicand = Fraction::make(*v1 * *b1 * *b3, *v2);
  } else {
    out.upper_holds = (p.B1 + p.B2) * (p.B1 + p.B2) * p.v2 > p.v1 * p.B1 * p.B3;
    out.lower_holds = p.v1 * (p.B2 + p.B3) * (p.B2 + p.B3) > p.v2 * p.B1 * p.B3;
    out.separation_holds = out.separation_margin > 0.0;
  }
  out.feasible = out.upper_holds && out.lower_holds && out.separation_holds;
  return out;
}

struct ThreeNodeClosedForm {
  double x1_star = 0.0;  // player 2 on item (1,2)
  double x2_star = 0.0;  // player 2 on item (2,3)
  double U1_star = 0.0;
  double U3_star = 0.0;
  double tau_bound_1 = 0.0;  // player 1 strictly gains on (0, tau_bound_1)
  double tau_bound_3 = 0.0;  // player 3 strictly gains on (0, tau_bound_3)
};

/// Upper end of the first interval (0, T) on which player 1 strictly gains.
inline double three_node_tau_bound_1(const ThreeNodeParams& p) {
  const double r = p.v1 / p.v2;
  return std::max(0.0, ((p.B1 - p.B3) - 2.0 * std::sqrt(r * p.B1 * p.B3)) / (1.0 + r));
}

/// Upper end of the first interval (0, T) on which player 3 strictly gains.
/// Player 3 gains iff sqrt((B1-t)(B3+t)) > sqrt(B1 B3) - t sqrt(v2/v1). Once
/// the right side turns negative (t >= sqrt(v1/v2 B1 B3)) the gain holds
/// outright; before that, squaring gives t < T3 below.
inline double three_node_tau_bound_3(const ThreeNodeParams& p) {
  const double k2 = p.v2 / p.v1;
  const double t3 = ((p.B1 - p.B3) + 2.0 * std::sqrt(k2 * p.B1 * p.B3)) / (1.0 + k2);
  const double sign_change = std::sqrt(p.B1 * p.B3 / k2);
  if (t3 < sign_change) return std::max(0.0, t3);
  return p.B1;
}

inline ThreeNodeClosedForm three_node_closed_form(const ThreeNodeParams& p, double tau) {
  validate(p);
  if (!std::isfinite(tau) || tau < 0.0 || tau >= p.B1)
    throw DomainError("tau must lie in [0, B1)");
  const double s1 = std::sqrt(p.v1) * std::sqrt(p.B1 - tau);
  const double s2 = std::sqrt(p.v2) * std::sqrt(p.B3 + tau);
  ThreeNodeClosedForm out;
  out.x1_star = ((p.B2 + p.B3 + tau) * s1 - (p.B1 - tau) * s2) / (s1 + s2);
  out.x2_star = ((p.B1 + p.B2 - tau) * s2 - (p.B3 + tau) * s1) / (s1 + s2);
  if (!(out.x1_star > 0.0) || !(out.x2_star > 0.0))
    throw BoundaryError("interior solution fails at tau=" + std::to_string(tau) +
                        " (x1*=" + std::to_string(out.x1_star) +
                        ", x2*=" + std::to_string(out.x2_star) + ")");
  const double total = p.B1 + p.B2 + p.B3;
  out.U1_star = s1 * (s1 + s2) / total;
  out.U3_star = s2 * (s1 + s2) / total;
  out.tau_bound_1 = three_node_tau_bound_1(p);
  out.tau_bound_3 = three_node_tau_bound_3(p);
  return out;
}

struct ThreeNodeCrossCheck {
  ThreeNodeClosedForm closed;
  double x1_solver = 0.0;
  double x2_solver = 0.0;
  double U1_solver = 0.0;
  double U3_solver = 0.0;
  double max_relative_error = 0.0;
};

/// Compares the closed forms against the general equilibrium solver.
inline ThreeNodeCrossCheck cross_validate_three_node(const ThreeNodeParams& p, double tau,
                                                     double tol) {
  ThreeNodeCrossCheck out;
  out.closed = three_node_closed_form(p, tau);
  const EquilibriumSolution sol = solve_equilibrium(three_node_instance(p, tau));
  out.x1_solver = sol.allocations[1].at(0);
  out.x2_solver = sol.allocations[1].at(2);
  out.U1_solver = sol.payoffs[0];
  out.U3_solver = sol.payoffs[2];

  const std::pair<const char*, std::pair<double, double>> pairs[] = {
      {"x1_star", {out.closed.x1_star, out.x1_solver}},
      {"x2_star", {out.closed.x2_star, out.x2_solver}},
      {"U1_star", {out.closed.U1_star, out.U1_solver}},
      {"U3_star", {out.closed.U3_star, out.U3_solver}}};
  for (auto [name, vals] : pairs) {
    const double scale = std::max(std::abs(vals.first), std::abs(vals.second));
    const double rel = scale > 0.0 ? std::abs(vals.first - vals.second) / scale : 0.0;
    out.max_relative_error = std::max(out.max_relative_error, rel);
    if (rel > tol)
      throw MismatchError(std::string(name) + " differs: closed form " +
                          std::to_string(vals.first) + " vs solver " +
                          std::to_string(vals.second) + " (relative " + std::to_string(rel) +
                          ")");
  }
  return out;
}

}  // namespace netcontest
