#pragma once

#include <cmath>
#include <vector>

#include "netcontest/coalition.hpp"
#include "netcontest/equilibrium.hpp"
#include "netcontest/linalg.hpp"

namespace netcontest::testing {

/// Central differences of the budget map, step h = rel_step * lambda_k.
inline Matrix fd_budget_jacobian(const ContestInstance& inst, const CostProfile& costs,
                                 double rel_step = 1e-6) {
  const std::size_t n = inst.size();
  Matrix jac(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<double> up(costs.values().begin(), costs.values().end());
    std::vector<double> down = up;
    const double h = rel_step * up[k];
    up[k] += h;
    down[k] -= h;
    const auto bu = budgets_from_costs(inst, CostProfile(up));
    const auto bd = budgets_from_costs(inst, CostProfile(down));
    for (std::size_t i = 0; i < n; ++i)
      jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = (bu[i] - bd[i]) / (2 * h);
  }
  return jac;
}

/// Slope of U_player along the transfer a -> b by central differences around
/// tau = 0 with half-width h (the backward point adds to the donor).
inline double fd_transfer_slope(const ContestInstance& inst, Player a, Player b, Player player,
                                double h) {
  auto payoff_at = [&](double tau) {
    std::vector<double> budgets(inst.budgets().begin(), inst.budgets().end());
    budgets[a] -= tau;
    budgets[b] += tau;
    return payoffs_from_costs(inst, costs_from_budgets(inst, budgets))[player];
  };
  return (payoff_at(h) - payoff_at(-h)) / (2 * h);
}

/// dU_i / db_{i,j} - dU_i / db_{i,i}: moves h of row i from the player itself
/// to j and back, central differences.
inline double fd_donation_slope(const ContestInstance& inst, const DonationProfile& profile,
                                Player i, Player j, double h) {
  auto payoff_at = [&](double step) {
    DonationProfile p = profile;
    const auto& s = p.support[i];
    const auto self = static_cast<std::size_t>(std::find(s.begin(), s.end(), i) - s.begin());
    const auto other = static_cast<std::size_t>(std::find(s.begin(), s.end(), j) - s.begin());
    p.rows[i][self] -= step;
    p.rows[i][other] += step;
    return payoffs_from_costs(inst, costs_from_budgets(inst, effective_budgets(inst, p)))[i];
  };
  return (payoff_at(h) - payoff_at(-h)) / (2 * h);
}

inline double relative_error(double got, double want, double floor = 1e-12) {
  return std::abs(got - want) / std::max({std::abs(want), std::abs(got), floor});
}

}  // namespace netcontest::testing
