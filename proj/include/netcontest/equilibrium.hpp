#pragma once

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "netcontest/errors.hpp"
#include "netcontest/instance.hpp"
#include "netcontest/linalg.hpp"

namespace netcontest {

/// Tullock win probability; the all-zero tie is split evenly.
inline double win_probability(double x_own, double x_opp) {
  if (!std::isfinite(x_own) || !std::isfinite(x_opp) || x_own < 0.0 || x_opp < 0.0)
    throw DomainError("win_probability needs finite nonnegative efforts");
  const double total = x_own + x_opp;
  if (total == 0.0) return 0.5;
  return x_own / total;
}

namespace detail {

inline void check_profile_shape(const ContestInstance& inst, const AllocationProfile& profile) {
  if (profile.size() != inst.size())
    throw ShapeError("allocation profile has " + std::to_string(profile.size()) +
                     " rows, expected " + std::to_string(inst.size()));
  for (Player i = 0; i < inst.size(); ++i) {
    const auto nbrs = inst.neighbors(i);
    if (profile[i].size() != nbrs.size())
      throw ShapeError("allocation row " + std::to_string(i) + " does not match its neighbors");
    for (const Neighbor& nb : nbrs) {
      if (!profile[i].contains(nb.player))
        throw ShapeError("allocation row " + std::to_string(i) + " is missing neighbor " +
                         std::to_string(nb.player));
    }
  }
}

}  // namespace detail

/// Payoff of every player under an arbitrary allocation profile.
inline std::vector<double> payoff(const ContestInstance& inst, const AllocationProfile& profile) {
  detail::check_profile_shape(inst, profile);
  std::vector<double> u(inst.size(), 0.0);
  for (Player i = 0; i < inst.size(); ++i) {
    for (const Neighbor& nb : inst.neighbors(i))
      u[i] += nb.value * win_probability(profile[i].at(nb.player), profile[nb.player].at(i));
  }
  return u;
}

/// Per-unit costs lambda_i > 0.
class CostProfile {
 public:
  CostProfile() = default;
  explicit CostProfile(std::vector<double> lambda) : lambda_(std::move(lambda)) {
    for (std::size_t i = 0; i < lambda_.size(); ++i) {
      if (!std::isfinite(lambda_[i]) || lambda_[i] <= 0.0)
        throw DomainError("lambda[" + std::to_string(i) + "] must be positive and finite");
    }
  }
  CostProfile(std::initializer_list<double> lambda) : CostProfile(std::vector<double>(lambda)) {}
  explicit CostProfile(const Vector& lambda) : CostProfile(to_std(lambda)) {}

  std::size_t size() const noexcept { return lambda_.size(); }
  double operator[](std::size_t i) const { return lambda_[i]; }
  std::span<const double> values() const noexcept { return lambda_; }
  Vector vector() const { return to_vector(lambda_); }

 private:
  std::vector<double> lambda_;
};

namespace detail {

inline void check_costs(const ContestInstance& inst, const CostProfile& costs) {
  if (costs.size() != inst.size())
    throw ShapeError("cost profile has " + std::to_string(costs.size()) + " entries, expected " +
                     std::to_string(inst.size()));
}

}  // namespace detail

/// x*_ij = v_ij lambda_j / (lambda_i + lambda_j)^2.
inline AllocationProfile allocations_from_costs(const ContestInstance& inst,
                                                const CostProfile& costs) {
  detail::check_costs(inst, costs);
  AllocationProfile x(inst.size());
  for (Player i = 0; i < inst.size(); ++i) {
    for (const Neighbor& nb : inst.neighbors(i)) {
      const double s = costs[i] + costs[nb.player];
      x[i][nb.player] = nb.value * costs[nb.player] / (s * s);
    }
  }
  return x;
}

/// U*_i = sum_j v_ij lambda_j / (lambda_i + lambda_j).
inline std::vector<double> payoffs_from_costs(const ContestInstance& inst,
                                              const CostProfile& costs) {
  detail::check_costs(inst, costs);
  std::vector<double> u(inst.size(), 0.0);
  for (Player i = 0; i < inst.size(); ++i) {
    for (const Neighbor& nb : inst.neighbors(i))
      u[i] += nb.value * costs[nb.player] / (costs[i] + costs[nb.player]);
  }
  return u;
}

/// B_i(lambda) = sum_j v_ij lambda_j / (lambda_i + lambda_j)^2.
inline std::vector<double> budgets_from_costs(const ContestInstance& inst,
                                              const CostProfile& costs) {
  detail::check_costs(inst, costs);
  std::vector<double> b(inst.size(), 0.0);
  for (Player i = 0; i < inst.size(); ++i) {
    for (const Neighbor& nb : inst.neighbors(i)) {
      const double s = costs[i] + costs[nb.player];
      b[i] += nb.value * costs[nb.player] / (s * s);
    }
  }
  return b;
}

/// J[i][k] = dB_i / dlambda_k.
inline Matrix budget_jacobian(const ContestInstance& inst, const CostProfile& costs) {
  detail::check_costs(inst, costs);
  const auto n = static_cast<Eigen::Index>(inst.size());
  Matrix jac = Matrix::Zero(n, n);
  for (Player i = 0; i < inst.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    for (const Neighbor& nb : inst.neighbors(i)) {
      const double li = costs[i];
      const double lj = costs[nb.player];
      const double s3 = std::pow(li + lj, 3);
      jac(ii, ii) -= 2.0 * nb.value * lj / s3;
      jac(ii, static_cast<Eigen::Index>(nb.player)) = nb.value * (li - lj) / s3;
    }
  }
  return jac;
}

/// Gradient of U*_i with respect to lambda.
inline Vector payoff_gradient(const ContestInstance& inst, const CostProfile& costs, Player i) {
  detail::check_costs(inst, costs);
  if (i >= inst.size()) throw IndexError("player " + std::to_string(i) + " out of range");
  Vector g = Vector::Zero(static_cast<Eigen::Index>(inst.size()));
  for (const Neighbor& nb : inst.neighbors(i)) {
    const double li = costs[i];
    const double lj = costs[nb.player];
    const double s2 = (li + lj) * (li + lj);
    g[static_cast<Eigen::Index>(i)] -= nb.value * lj / s2;
    g[static_cast<Eigen::Index>(nb.player)] = nb.value * li / s2;
  }
  return g;
}

struct SolverOptions {
  double tol = 1e-12;
  int max_iter = 200;
};

struct CostSolve {
  CostProfile costs;
  double residual = 0.0;
  int iterations = 0;
};

/// Trust-region radii for Newton steps in log(lambda).
inline constexpr double kInitialLogRadius = 1.0;
inline constexpr double kMaxLogRadius = 8.0;

/// Inverts the budget map by damped Newton iteration.
inline CostSolve solve_costs(const ContestInstance& inst, std::span<const double> budgets,
                             const SolverOptions& opts = {},
                             const std::optional<CostProfile>& warm_start = std::nullopt) {
  const std::size_t n = inst.size();
  if (budgets.size() != n)
    throw ShapeError("expected " + std::to_string(n) + " budgets, got " +
                     std::to_string(budgets.size()));
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(budgets[i]) || budgets[i] <= 0.0)
      throw DomainError("budget " + std::to_string(i) + " must be positive");
  }

  std::vector<double> lambda(n);
  if (warm_start && warm_start->size() == n) {
    lambda.assign(warm_start->values().begin(), warm_start->values().end());
  } else {
    for (Player i = 0; i < n; ++i) {
      double total = 0.0;
      for (const Neighbor& nb : inst.neighbors(i)) total += nb.value;
      lambda[i] = total / (4.0 * budgets[i]);
    }
  }

  // Newton on the relative residual r_i = B_i(lambda)/b_i - 1 in the
  // coordinates mu = log(lambda), globalized by a dogleg trust region on
  // |r|^2. Positivity holds by construction; a plain line search along the
  // Newton direction stalls when some lambda_i must move by decades.
  const Vector inv_b = to_vector(budgets).cwiseInverse();
  auto residual_of = [&](const std::vector<double>& l) {
    return Vector(to_vector(budgets_from_costs(inst, CostProfile(l))).cwiseProduct(inv_b) -
                  Vector::Ones(static_cast<Eigen::Index>(n)));
  };
  Vector r = residual_of(lambda);
  double res = r.lpNorm<Eigen::Infinity>();
  double best = res;
  double radius = kInitialLogRadius;

  int iter = 0;
  while (res > opts.tol) {
    if (iter >= opts.max_iter)
      throw ConvergenceError("Newton solve for costs did not converge", best, iter);
    ++iter;
    const Vector lam = to_vector(lambda);
    const Matrix jac =
        inv_b.asDiagonal() * budget_jacobian(inst, CostProfile(lambda)) * lam.asDiagonal();
    // Only a step is needed here, so no conditioning gate.
    const Vector newton = Eigen::PartialPivLU<Matrix>(jac).solve(Vector(-r));
    const Vector grad = jac.transpose() * r;
    const Vector jg = jac * grad;
    const Vector cauchy = -(grad.squaredNorm() / jg.squaredNorm()) * grad;

    const double merit = r.squaredNorm();
    bool accepted = false;
    for (int shrink = 0; shrink <= 60; ++shrink) {
      Vector step;
      if (newton.allFinite() && newton.norm() <= radius) {
        step = newton;
      } else if (!cauchy.allFinite() || cauchy.norm() >= radius || !newton.allFinite()) {
        step = -(radius / grad.norm()) * grad;
      } else {
        // Walk from the Cauchy point toward the Newton point up to the boundary.
        const Vector d = newton - cauchy;
        const double a = d.squaredNorm();
        const double bq = 2.0 * cauchy.dot(d);
        const double c = cauchy.squaredNorm() - radius * radius;
        const double t = (-bq + std::sqrt(bq * bq - 4.0 * a * c)) / (2.0 * a);
        step = cauchy + t * d;
      }
      if (!step.allFinite()) break;

      std::vector<double> trial(n);
      bool valid = true;
      for (std::size_t i = 0; i < n; ++i) {
        trial[i] = lambda[i] * std::exp(step[static_cast<Eigen::Index>(i)]);
        if (!(trial[i] > 0.0) || !std::isfinite(trial[i])) valid = false;
      }
      if (valid) {
        Vector next = residual_of(trial);
        const double predicted = merit - (r + jac * step).squaredNorm();
        const double actual = merit - next.squaredNorm();
        const double rho = predicted > 0.0 ? actual / predicted : -1.0;
        if (actual > 0.0 && rho > 1e-4) {
          if (rho > 0.75 && step.norm() > 0.99 * radius)
            radius = std::min(2.0 * radius, kMaxLogRadius);
          else if (rho < 0.25)
            radius = 0.25 * step.norm();
          lambda = std::move(trial);
          r = std::move(next);
          res = r.lpNorm<Eigen::Infinity>();
          accepted = true;
          break;
        }
      }
      radius = 0.25 * std::min(radius, step.norm());
    }
    if (!accepted)
      throw ConvergenceError("Newton iteration stalled; the budgets may admit no interior "
                             "equilibrium", best, iter);
    best = std::min(best, res);
  }
  return {CostProfile(std::move(lambda)), res, iter};
}

inline CostProfile costs_from_budgets(const ContestInstance& inst, std::span<const double> budgets,
                                      const SolverOptions& opts = {},
                                      const std::optional<CostProfile>& warm_start = std::nullopt) {
  return solve_costs(inst, budgets, opts, warm_start).costs;
}

struct EquilibriumSolution {
  CostProfile costs;
  AllocationProfile allocations;
  std::vector<double> payoffs;
  double residual = 0.0;
};

inline EquilibriumSolution solution_from_costs(const ContestInstance& inst, CostProfile costs,
                                               double residual) {
  EquilibriumSolution sol;
  sol.allocations = allocations_from_costs(inst, costs);
  sol.payoffs = payoffs_from_costs(inst, costs);
  sol.costs = std::move(costs);
  sol.residual = residual;
  return sol;
}

inline EquilibriumSolution solve_equilibrium(
    const ContestInstance& inst, const SolverOptions& opts = {},
    const std::optional<CostProfile>& warm_start = std::nullopt) {
  CostSolve cs = solve_costs(inst, inst.budgets(), opts, warm_start);
  return solution_from_costs(inst, std::move(cs.costs), cs.residual);
}

/// Best response of player i to fixed opponent efforts, found by bisection on
/// the player's budget multiplier with per-item water-filling. Independent of
/// the cost parametrization; used to validate it.
inline Allocation best_response_oracle(const ContestInstance& inst,
                                       const AllocationProfile& profile, Player i,
                                       double tol = 1e-13) {
  if (i >= inst.size()) throw IndexError("player " + std::to_string(i) + " out of range");
  detail::check_profile_shape(inst, profile);
  const auto nbrs = inst.neighbors(i);
  const double budget = inst.budget(i);

  std::vector<double> opp(nbrs.size());
  double mu_hi = 0.0;
  for (std::size_t k = 0; k < nbrs.size(); ++k) {
    opp[k] = profile[nbrs[k].player].at(i);
    if (!std::isfinite(opp[k]) || opp[k] < 0.0)
      throw DomainError("opponent effort must be finite and nonnegative");
    if (opp[k] == 0.0)
      throw DomainError("best response undefined against a zero opponent effort on item (" +
                        std::to_string(i) + "," + std::to_string(nbrs[k].player) + ")");
    mu_hi = std::max(mu_hi, nbrs[k].value / opp[k]);
  }

  auto spend = [&](double mu, Allocation* out) {
    double total = 0.0;
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      const double x = std::max(0.0, std::sqrt(nbrs[k].value * opp[k] / mu) - opp[k]);
      total += x;
      if (out) (*out)[nbrs[k].player] = x;
    }
    return total;
  };

  // spend() is decreasing in mu and vanishes at mu_hi.
  double mu_lo = mu_hi;
  int guard = 0;
  while (spend(mu_lo, nullptr) < budget) {
    mu_lo *= 0.5;
    if (++guard > 2000) throw ConvergenceError("best response bracket not found", budget, guard);
  }
  Allocation out;
  for (int it = 0; it < 400; ++it) {
    const double mu = 0.5 * (mu_lo + mu_hi);
    const double total = spend(mu, &out);
    if (std::abs(total - budget) <= tol * budget) return out;
    if (total > budget)
      mu_lo = mu;
    else
      mu_hi = mu;
    if (mu_hi - mu_lo <= 1e-17 * mu_hi) break;
  }
  const double total = spend(mu_lo, &out);
  if (std::abs(total - budget) <= 1e3 * tol * budget) return out;
  throw ConvergenceError("best response bisection did not converge",
                         std::abs(total - budget) / budget, 400);
}

}  // namespace netcontest
