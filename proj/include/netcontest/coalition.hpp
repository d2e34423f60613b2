#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "netcontest/equilibrium.hpp"
#include "netcontest/errors.hpp"
#include "netcontest/instance.hpp"
#include "netcontest/linalg.hpp"

namespace netcontest {

/// Row-stochastic donation fractions. Row i holds b_{i,j} for j in support[i].
struct DonationProfile {
  std::vector<std::vector<Player>> support;
  std::vector<std::vector<double>> rows;

  std::size_t size() const noexcept { return rows.size(); }

  double fraction(Player i, Player j) const {
    const auto& s = support.at(i);
    const auto it = std::find(s.begin(), s.end(), j);
    return it == s.end() ? 0.0 : rows[i][static_cast<std::size_t>(it - s.begin())];
  }

  /// Everyone keeps their whole budget.
  static DonationProfile identity(const DonationGraph& graph, std::size_t n) {
    DonationProfile p;
    for (Player i = 0; i < n; ++i) {
      p.support.push_back(graph.options(i));
      std::vector<double> row(p.support.back().size(), 0.0);
      const auto self = std::find(p.support.back().begin(), p.support.back().end(), i);
      row[static_cast<std::size_t>(self - p.support.back().begin())] = 1.0;
      p.rows.push_back(std::move(row));
    }
    return p;
  }

  /// Uniform over D_i for the listed donors, identity elsewhere.
  static DonationProfile uniform(const DonationGraph& graph, std::size_t n,
                                 const std::vector<Player>& donors) {
    DonationProfile p = identity(graph, n);
    for (Player i : donors) {
      auto& row = p.rows.at(i);
      std::fill(row.begin(), row.end(), 1.0 / static_cast<double>(row.size()));
    }
    return p;
  }

  void validate(std::size_t n) const {
    if (rows.size() != n || support.size() != n)
      throw ShapeError("donation profile has " + std::to_string(rows.size()) + " rows, expected " +
                       std::to_string(n));
    for (Player i = 0; i < n; ++i) {
      const std::string field = "donations[" + std::to_string(i) + "]";
      if (rows[i].size() != support[i].size()) throw ValidationError(field, "row/support mismatch");
      if (std::find(support[i].begin(), support[i].end(), i) == support[i].end())
        throw ValidationError(field, "support must contain the player itself");
      double sum = 0.0;
      for (std::size_t k = 0; k < rows[i].size(); ++k) {
        if (support[i][k] >= n) throw ValidationError(field, "recipient out of range");
        if (!(rows[i][k] >= 0.0)) throw ValidationError(field, "negative fraction");
        sum += rows[i][k];
      }
      if (std::abs(sum - 1.0) > 1e-12) throw ValidationError(field, "row does not sum to 1");
    }
  }
};

/// B~_l = sum_i b_{i,l} B_i, including each player's retained share.
inline std::vector<double> effective_budgets(const ContestInstance& inst,
                                             const DonationProfile& profile) {
  profile.validate(inst.size());
  std::vector<double> out(inst.size(), 0.0);
  for (Player i = 0; i < inst.size(); ++i)
    for (std::size_t k = 0; k < profile.rows[i].size(); ++k)
      out[profile.support[i][k]] += profile.rows[i][k] * inst.budget(i);
  const double max_b = *std::max_element(inst.budgets().begin(), inst.budgets().end());
  for (Player i = 0; i < inst.size(); ++i) {
    if (out[i] <= 1e-12 * max_b)
      throw DegenerateBudgetError("effective budget of player " + std::to_string(i) +
                                  " vanishes");
  }
  return out;
}

/// df_{i,j} = dU_i / db_{i,j} over j in the row's support.
struct DonationGradient {
  Player player = 0;
  std::vector<Player> support;
  std::vector<double> f;
};

/// Gradient at an already solved equilibrium of the effective budgets.
inline DonationGradient donation_gradient_at(const ContestInstance& inst,
                                             const DonationProfile& profile,
                                             const CostProfile& costs, Player i) {
  const Vector w =
      solve_checked(budget_jacobian(inst, costs).transpose(), payoff_gradient(inst, costs, i));
  DonationGradient g;
  g.player = i;
  g.support = profile.support.at(i);
  for (Player j : g.support) g.f.push_back(inst.budget(i) * w[static_cast<Eigen::Index>(j)]);
  return g;
}

inline DonationGradient donation_gradient(const ContestInstance& inst,
                                          const DonationProfile& profile, Player i,
                                          const SolverOptions& opts = {}) {
  if (i >= inst.size()) throw IndexError("player " + std::to_string(i) + " out of range");
  const auto budgets = effective_budgets(inst, profile);
  const CostProfile costs = costs_from_budgets(inst, budgets, opts);
  return donation_gradient_at(inst, profile, costs, i);
}

/// One multiplicative update of a single row.
inline std::vector<double> replicator_row(const std::vector<double>& b,
                                          const std::vector<double>& f, double beta) {
  if (b.size() != f.size()) throw ShapeError("gradient row does not match donation row");
  double min_f = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < b.size(); ++k)
    if (b[k] > 0.0) min_f = std::min(min_f, f[k]);
  if (!(beta + min_f > 0.0)) throw BetaTooSmallError(beta, -min_f);
  // beta + sum_k b_k f_k, summed as the numerators so rounding cannot pull the row off the simplex.
  std::vector<double> out(b.size());
  double denom = 0.0;
  for (std::size_t k = 0; k < b.size(); ++k) denom += out[k] = b[k] * (beta + f[k]);
  for (double& x : out) x /= denom;
  return out;
}

/// Updates every row with a nonempty gradient; rows with an empty gradient stay put.
inline DonationProfile replicator_step(const DonationProfile& profile,
                                       const std::vector<std::vector<double>>& f, double beta) {
  if (f.size() != profile.size()) throw ShapeError("one gradient row per player expected");
  DonationProfile out = profile;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (!f[i].empty()) out.rows[i] = replicator_row(profile.rows[i], f[i], beta);
  return out;
}

enum class StopReason { kGradientFlat, kMaxIters, kSimplexCorner };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::kGradientFlat: return "gradient-flat";
    case StopReason::kMaxIters: return "max-iters";
    case StopReason::kSimplexCorner: return "simplex-corner";
  }
  return "?";
}

struct OptimizerRecord {
  int iter = 0;
  DonationProfile profile;
  std::vector<double> payoffs;
  std::vector<std::vector<double>> gradients;  // empty for non-donors
  double beta = 0.0;
  double dispersion = 0.0;
};

struct OptimizerTrace {
  std::vector<Player> donors;
  std::vector<OptimizerRecord> records;
  std::optional<StopReason> reason;  // unset if a step threw

  const OptimizerRecord& final() const { return records.back(); }
};

struct OptimizerOptions {
  std::optional<double> beta;      // default 1 + max |f|, recomputed each iteration
  int max_iters = 2000;
  std::optional<double> flat_tol;  // default 1e-8 (1 + sum v)
  std::optional<DonationProfile> seed;
  SolverOptions solver;
};

/// Fractions below this count as extinct when judging stationarity.
inline constexpr double kSupportFloor = 1e-9;

namespace detail {

/// Largest |f_ij - sum_k b_ik f_ik| over the coordinates still alive.
inline double row_dispersion(const std::vector<double>& b, const std::vector<double>& f) {
  double mean = 0.0;
  for (std::size_t k = 0; k < b.size(); ++k) mean += b[k] * f[k];
  double d = 0.0;
  for (std::size_t k = 0; k < b.size(); ++k)
    if (b[k] > kSupportFloor) d = std::max(d, std::abs(f[k] - mean));
  return d;
}

/// Effectively a vertex whose coordinate has the best marginal payoff.
inline bool stationary_corner(const std::vector<double>& b, const std::vector<double>& f) {
  const auto top = static_cast<std::size_t>(std::max_element(b.begin(), b.end()) - b.begin());
  if (b[top] < 1.0 - kSupportFloor) return false;
  return f[top] >= *std::max_element(f.begin(), f.end());
}

}  // namespace detail

/// Replicator ascent on the donor rows; other rows stay at their seed
/// (identity by default). `trace` keeps every completed iteration even if a
/// later one throws.
inline void optimize_donations_into(const ContestInstance& inst, const DonationGraph& graph,
                                    const std::vector<Player>& donors,
                                    const OptimizerOptions& opts, OptimizerTrace& trace) {
  if (donors.empty()) throw PreconditionError("at least one donor is required");
  graph.check_range(inst.size());
  for (Player d : donors)
    if (d >= inst.size()) throw IndexError("donor " + std::to_string(d) + " out of range");
  if (opts.max_iters < 0) throw PreconditionError("max_iters must be nonnegative");
  const double flat_tol = opts.flat_tol.value_or(1e-8 * (1.0 + inst.total_value()));

  DonationProfile profile =
      opts.seed ? *opts.seed : DonationProfile::uniform(graph, inst.size(), donors);
  profile.validate(inst.size());
  trace = OptimizerTrace{};
  trace.donors = donors;

  std::optional<CostProfile> warm;
  for (int iter = 0;; ++iter) {
    const auto budgets = effective_budgets(inst, profile);
    CostProfile costs = costs_from_budgets(inst, budgets, opts.solver, warm);
    OptimizerRecord rec;
    rec.iter = iter;
    rec.profile = profile;
    rec.payoffs = payoffs_from_costs(inst, costs);
    rec.gradients.assign(inst.size(), {});
    double max_abs_f = 0.0;
    bool all_corners = true;
    for (Player i : donors) {
      auto g = donation_gradient_at(inst, profile, costs, i);
      for (double v : g.f) max_abs_f = std::max(max_abs_f, std::abs(v));
      rec.dispersion = std::max(rec.dispersion, detail::row_dispersion(profile.rows[i], g.f));
      all_corners = all_corners && detail::stationary_corner(profile.rows[i], g.f);
      rec.gradients[i] = std::move(g.f);
    }
    rec.beta = opts.beta.value_or(1.0 + max_abs_f);
    warm = std::move(costs);
    trace.records.push_back(rec);

    if (rec.dispersion < flat_tol) {
      trace.reason = StopReason::kGradientFlat;
      return;
    }
    if (all_corners) {
      trace.reason = StopReason::kSimplexCorner;
      return;
    }
    if (iter >= opts.max_iters) {
      trace.reason = StopReason::kMaxIters;
      return;
    }
    profile = replicator_step(profile, rec.gradients, rec.beta);
  }
}

inline OptimizerTrace optimize_donations(const ContestInstance& inst, const DonationGraph& graph,
                                         const std::vector<Player>& donors,
                                         const OptimizerOptions& opts = {}) {
  OptimizerTrace trace;
  optimize_donations_into(inst, graph, donors, opts, trace);
  return trace;
}

}  // namespace netcontest
