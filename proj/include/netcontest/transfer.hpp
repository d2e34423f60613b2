#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "netcontest/equilibrium.hpp"
#include "netcontest/errors.hpp"
#include "netcontest/instance.hpp"
#include "netcontest/linalg.hpp"

namespace netcontest {

/// Payoff derivatives of a transfer from donor a to recipient b at zero transfer.
struct TransferSensitivity {
  Player donor = 0;
  Player recipient = 0;
  double dU_a = 0.0;
  double dU_b = 0.0;
  Vector q_a_vec;  // s with J^T s = grad U_a
  Vector q_b_vec;  // t with J^T t = grad U_b
  Vector direction;

  bool mutually_beneficial() const noexcept { return dU_a > 0.0 && dU_b > 0.0; }
};

namespace detail {

inline void check_transfer_pair(const ContestInstance& inst, Player a, Player b) {
  if (a >= inst.size() || b >= inst.size())
    throw IndexError("player index out of range (n = " + std::to_string(inst.size()) + ")");
  if (a == b) throw PreconditionError("donor and recipient must differ");
}

}  // namespace detail

/// Sensitivity at a given cost profile (the budgets are those generated by it).
inline TransferSensitivity transfer_derivative_at(const ContestInstance& inst,
                                                  const CostProfile& costs, Player a, Player b) {
  detail::check_transfer_pair(inst, a, b);
  const Matrix jt = budget_jacobian(inst, costs).transpose();
  TransferSensitivity out;
  out.donor = a;
  out.recipient = b;
  out.q_a_vec = solve_checked(jt, payoff_gradient(inst, costs, a));
  out.q_b_vec = solve_checked(jt, payoff_gradient(inst, costs, b));
  const auto ia = static_cast<Eigen::Index>(a);
  const auto ib = static_cast<Eigen::Index>(b);
  out.direction = Vector::Zero(static_cast<Eigen::Index>(inst.size()));
  out.direction[ia] = -1.0;
  out.direction[ib] = 1.0;
  out.dU_a = out.q_a_vec[ib] - out.q_a_vec[ia];
  out.dU_b = out.q_b_vec[ib] - out.q_b_vec[ia];
  return out;
}

inline TransferSensitivity transfer_derivative(const ContestInstance& inst, Player a, Player b,
                                               const SolverOptions& opts = {}) {
  detail::check_transfer_pair(inst, a, b);
  const CostProfile costs = costs_from_budgets(inst, inst.budgets(), opts);
  return transfer_derivative_at(inst, costs, a, b);
}

/// Budgets after moving tau from a to b.
inline std::vector<double> transferred_budgets(const ContestInstance& inst, Player a, Player b,
                                               double tau) {
  std::vector<double> budgets(inst.budgets().begin(), inst.budgets().end());
  budgets[a] -= tau;
  budgets[b] += tau;
  return budgets;
}

struct BenefitInterval {
  std::size_t first = 0;  // grid indices of the beneficial run
  std::size_t last = 0;
  double lo = 0.0;  // refined endpoints
  double hi = 0.0;
};

struct TransferCurve {
  Player donor = 0;
  Player recipient = 0;
  std::vector<double> grid;
  std::vector<double> U_a;
  std::vector<double> U_b;
  std::vector<bool> beneficial;
  std::pair<double, double> baseline{0.0, 0.0};
  std::vector<BenefitInterval> intervals;
};

/// Improvement required before a payoff counts as strictly higher.
inline double benefit_threshold(double baseline) { return 1e-10 * (1.0 + std::abs(baseline)); }

namespace detail {

struct TransferEval {
  double ua = 0.0;
  double ub = 0.0;
  CostProfile costs;
};

inline TransferEval eval_transfer(const ContestInstance& inst, Player a, Player b, double tau,
                                  const SolverOptions& opts,
                                  const std::optional<CostProfile>& warm) {
  const std::vector<double> budgets = transferred_budgets(inst, a, b, tau);
  try {
    CostProfile costs = costs_from_budgets(inst, budgets, opts, warm);
    const auto u = payoffs_from_costs(inst, costs);
    return {u[a], u[b], std::move(costs)};
  } catch (const ConvergenceError& e) {
    throw e.with_context("at tau=" + std::to_string(tau));
  }
}

}  // namespace detail

/// Re-solves the equilibrium on an evenly spaced grid over [0, tau_max]
/// (steps points) and extracts the mutually beneficial runs.
inline TransferCurve sweep_transfer(const ContestInstance& inst, Player a, Player b, int steps,
                                    double tau_max, const SolverOptions& opts = {}) {
  detail::check_transfer_pair(inst, a, b);
  if (steps < 2) throw PreconditionError("sweep needs at least 2 grid points");
  if (!(tau_max > 0.0) || !(tau_max < inst.budget(a)))
    throw PreconditionError("tau_max must lie in (0, B_a) = (0, " +
                            std::to_string(inst.budget(a)) + ")");

  TransferCurve curve;
  curve.donor = a;
  curve.recipient = b;
  std::optional<CostProfile> warm;
  for (int k = 0; k < steps; ++k) {
    const double tau = k == steps - 1 ? tau_max : tau_max * k / (steps - 1);
    auto ev = detail::eval_transfer(inst, a, b, tau, opts, warm);
    curve.grid.push_back(tau);
    curve.U_a.push_back(ev.ua);
    curve.U_b.push_back(ev.ub);
    warm = std::move(ev.costs);
  }
  curve.baseline = {curve.U_a[0], curve.U_b[0]};
  const double thr_a = benefit_threshold(curve.baseline.first);
  const double thr_b = benefit_threshold(curve.baseline.second);

  auto gap = [&](double ua, double ub) {
    return std::min(ua - curve.baseline.first - thr_a, ub - curve.baseline.second - thr_b);
  };
  for (std::size_t k = 0; k < curve.grid.size(); ++k)
    curve.beneficial.push_back(k > 0 && gap(curve.U_a[k], curve.U_b[k]) > 0.0);

  // Bisect the crossing of the improvement gap between a good and a bad grid point.
  const double resolution = 1e-6 * inst.budget(a);
  auto refine = [&](double good, double bad) {
    while (std::abs(good - bad) > resolution) {
      const double mid = 0.5 * (good + bad);
      const auto ev = detail::eval_transfer(inst, a, b, mid, opts, std::nullopt);
      if (gap(ev.ua, ev.ub) > 0.0)
        good = mid;
      else
        bad = mid;
    }
    return good;
  };

  for (std::size_t k = 0; k < curve.grid.size();) {
    if (!curve.beneficial[k]) {
      ++k;
      continue;
    }
    BenefitInterval iv;
    iv.first = k;
    while (k + 1 < curve.grid.size() && curve.beneficial[k + 1]) ++k;
    iv.last = k;
    iv.lo = refine(curve.grid[iv.first], curve.grid[iv.first - 1]);
    iv.hi = iv.last + 1 < curve.grid.size() ? refine(curve.grid[iv.last], curve.grid[iv.last + 1])
                                            : curve.grid[iv.last];
    curve.intervals.push_back(iv);
    ++k;
  }
  return curve;
}

}  // namespace netcontest
