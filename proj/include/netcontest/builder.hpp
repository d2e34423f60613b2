#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "netcontest/equilibrium.hpp"
#include "netcontest/errors.hpp"
#include "netcontest/instance.hpp"
#include "netcontest/linalg.hpp"
#include "netcontest/transfer.hpp"

namespace netcontest {

/// Tridiagonal (or cyclic tridiagonal) Jacobian coordinates of a path or
/// cycle whose nodes are numbered in path order. Edge k joins k and k+1
/// (mod n for the closing edge of a cycle).
struct LineLadder {
  std::size_t n = 0;
  bool cyclic = false;
  std::vector<double> jac_diag;  // a_i
  std::vector<double> jac_off;   // b_k = K_{k,k+1} - K_{k+1,k}
  std::vector<double> K_fwd;     // K_{k,k+1} = w_k lambda_k
  std::vector<double> K_bwd;     // K_{k+1,k} = w_k lambda_{k+1}
  std::vector<double> w;         // v_k / (lambda_k + lambda_{k+1})^3
  CostProfile lambda;
  std::vector<double> values;

  std::size_t edge_count() const noexcept { return values.size(); }
  Player head(std::size_t k) const noexcept { return k; }
  Player tail(std::size_t k) const noexcept { return (k + 1) % n; }

  /// J with J_ii = a_i, J_{k,k+1} = b_k and J_{k+1,k} = -b_k.
  Matrix jacobian() const {
    const auto m = static_cast<Eigen::Index>(n);
    Matrix j = Matrix::Zero(m, m);
    for (std::size_t i = 0; i < n; ++i) j(Eigen::Index(i), Eigen::Index(i)) = jac_diag[i];
    for (std::size_t k = 0; k < edge_count(); ++k) {
      const auto h = static_cast<Eigen::Index>(head(k)), t = static_cast<Eigen::Index>(tail(k));
      j(h, t) += jac_off[k];
      j(t, h) -= jac_off[k];
    }
    return j;
  }

  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    for (std::size_t k = 0; k < edge_count(); ++k) out.push_back({head(k), tail(k), values[k]});
    return out;
  }

  /// The instance whose equilibrium costs are exactly `lambda`.
  ContestInstance instance() const {
    ContestInstance shape(std::vector<double>(n, 1.0), edges());
    return shape.with_budgets(budgets_from_costs(shape, lambda));
  }
};

/// Builds the ladder from costs and per-edge values directly.
inline LineLadder make_ladder(const CostProfile& lambda, std::vector<double> values, bool cyclic) {
  const std::size_t n = lambda.size();
  if (n < 2) throw TopologyError("a line needs at least two nodes");
  if (values.size() != (cyclic ? n : n - 1)) throw ShapeError("wrong number of edge values");
  if (cyclic && n < 3) throw TopologyError("a cycle needs at least three nodes");
  LineLadder l;
  l.n = n;
  l.cyclic = cyclic;
  l.lambda = lambda;
  l.values = std::move(values);
  l.jac_diag.assign(n, 0.0);
  for (std::size_t k = 0; k < l.values.size(); ++k) {
    if (!(l.values[k] > 0.0)) throw ControlError("edge value must be positive");
    const double li = lambda[l.head(k)], lj = lambda[l.tail(k)];
    const double wk = l.values[k] / std::pow(li + lj, 3);
    l.w.push_back(wk);
    l.K_fwd.push_back(wk * li);
    l.K_bwd.push_back(wk * lj);
    l.jac_off.push_back(wk * (li - lj));
    l.jac_diag[l.head(k)] -= 2.0 * wk * lj;
    l.jac_diag[l.tail(k)] -= 2.0 * wk * li;
  }
  return l;
}

/// Requires edges exactly {(k, k+1)}, plus (0, n-1) for a cycle.
inline LineLadder ladder_from_instance(const ContestInstance& inst, const CostProfile& costs) {
  const std::size_t n = inst.size();
  const auto edges = inst.edges();
  const bool cyclic = n >= 3 && edges.size() == n;
  if (edges.size() != (cyclic ? n : n - 1))
    throw TopologyError("graph is not a path or a single cycle");
  std::vector<double> values;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (!inst.has_edge(k, k + 1))
      throw TopologyError("nodes are not in path order: missing edge (" + std::to_string(k) +
                          ", " + std::to_string(k + 1) + ")");
    values.push_back(inst.value(k, k + 1));
  }
  if (cyclic) {
    if (!inst.has_edge(0, n - 1)) throw TopologyError("graph is not a path or a single cycle");
    values.push_back(inst.value(0, n - 1));
  }
  return make_ladder(costs, std::move(values), cyclic);
}

/// Recovers costs and values from K coordinates of a path, fixing lambda_0 = 1.
inline LineLadder ladder_from_coordinates(const std::vector<double>& K_fwd,
                                          const std::vector<double>& K_bwd) {
  if (K_fwd.size() != K_bwd.size() || K_fwd.empty()) throw ShapeError("K vectors must match");
  std::vector<double> lambda{1.0};
  std::vector<double> values;
  for (std::size_t k = 0; k < K_fwd.size(); ++k) {
    if (!(K_fwd[k] > 0.0) || !(K_bwd[k] > 0.0))
      throw ControlError("K coordinates must be positive (edge " + std::to_string(k) + ")");
    const double li = lambda.back();
    const double lj = li * K_bwd[k] / K_fwd[k];
    const double wk = K_fwd[k] / li;
    lambda.push_back(lj);
    values.push_back(wk * std::pow(li + lj, 3));
  }
  return make_ladder(CostProfile(std::move(lambda)), std::move(values), false);
}

/// An instance together with the derivative certificate for its transfer.
struct CertifiedInstance {
  ContestInstance instance;
  Certificate certificate;
};

/// Re-solves the equilibrium and checks both derivative components are positive.
inline Certificate certify(const ContestInstance& inst, Player a, Player b, double epsilon = 0.0,
                           const SolverOptions& opts = {}) {
  TransferSensitivity s;
  try {
    s = transfer_derivative(inst, a, b, opts);
  } catch (const ConvergenceError& e) {
    throw CertificateError(std::string("cannot certify: ") + e.what());
  } catch (const SingularSystemError& e) {
    throw CertificateError(std::string("cannot certify: ") + e.what());
  }
  if (!s.mutually_beneficial())
    throw CertificateError("transfer " + std::to_string(a) + " -> " + std::to_string(b) +
                           " is not mutually beneficial (dU = " + std::to_string(s.dU_a) + ", " +
                           std::to_string(s.dU_b) + ")");
  return {a, b, s.dU_a, s.dU_b, epsilon};
}

/// Checks a stored certificate against a fresh derivative computation.
inline void verify_certificate(const CertifiedInstance& ci, double rel_tol = 1e-6) {
  const Certificate& c = ci.certificate;
  const Certificate fresh = certify(ci.instance, c.donor, c.recipient, c.epsilon);
  auto close = [&](double got, double want) {
    return std::abs(got - want) <= rel_tol * std::max(1e-12, std::abs(want));
  };
  if (!close(c.dU_donor, fresh.dU_donor) || !close(c.dU_recipient, fresh.dU_recipient))
    throw CertificateError("stored certificate disagrees with recomputed derivatives");
}

struct BaseLines {
  CertifiedInstance line3;
  CertifiedInstance line4;
};

/// Donor is the first node and recipient the last in both.
inline BaseLines base_line_instances() {
  // Found once by a seeded search over integer budgets and values; the
  // certificate is frozen alongside.
  ContestInstance line3({6, 6, 1}, {{0, 1, 2.0}, {1, 2, 10.0}});
  ContestInstance line4({8, 9, 1, 7}, {{0, 1, 2.0}, {1, 2, 26.0}, {2, 3, 29.0}});
  return {{std::move(line3), {0, 2, 0.19725804968279879, 1.1203349727597219, 0.0}},
          {std::move(line4), {0, 3, 0.0330859416541203, 0.68981882590535193, 0.0}}};
}

/// Controls of the two-node line extension. alpha2 and r_b are derived from
/// the ladder coordinates at the recipient end.
struct ExtensionControls {
  double eta1 = 1.0 - 1.0 / 64.0;
  double eta2 = 0.5;
  double b1_seed = 1.0;
  double alpha2 = 1.0;
  double r_b = 0.0;
};

inline ExtensionControls make_extension_controls(const LineLadder& ladder,
                                                 double eta1 = 1.0 - 1.0 / 64.0,
                                                 double eta2 = 0.5, double b1_seed = 1.0) {
  if (ladder.cyclic || ladder.n < 3) throw TopologyError("extension needs a path of 3+ nodes");
  if (!(eta1 > 0.0 && eta1 < 1.0)) throw ControlError("eta1 must lie in (0, 1)");
  if (!(eta2 > 0.0 && eta2 < 1.0)) throw ControlError("eta2 must lie in (0, 1)");
  if (b1_seed == 0.0 || !std::isfinite(b1_seed)) throw ControlError("b1_seed must be nonzero");
  const std::size_t rec = ladder.n - 1;
  const double a3 = ladder.jac_diag[rec - 1];
  const double an = ladder.jac_diag[rec];
  // Coupling from the recipient to its neighbor, oriented recipient first.
  const double bn = -ladder.jac_off[rec - 1];
  const double shifted = an - (eta1 - 1.0) / eta2 * bn * bn / a3;
  ExtensionControls c{eta1, eta2, b1_seed, 0.0, 0.0};
  c.alpha2 = (eta2 * a3 * an - bn * (eta1 - 1.0) * (2.0 * bn - an)) /
             (eta2 * a3 * an - (eta1 - 1.0) * bn * bn);
  if (!(c.alpha2 > 0.0))
    throw ControlError("alpha2 = " + std::to_string(c.alpha2) + " is not positive");
  c.r_b = eta1 * (2.0 * c.alpha2 * bn - (2.0 * bn - an)) / (c.alpha2 * shifted);
  if (!std::isfinite(c.r_b)) throw ControlError("r_b is not finite");
  return c;
}

inline constexpr int kExtensionAttempts = 20000;
inline constexpr int kExtensionCandidates = 40;
inline constexpr int kReachProbes = 40;

/// Largest probed transfer tau = B_a 2^-k (k = 1..kReachProbes), as a
/// fraction of B_a, at which both a and b strictly gain; 0 if none does.
/// A certificate near a fold of the budget map can hold with no probe
/// resolving the gain.
inline double benefit_reach(const ContestInstance& inst, Player a, Player b) {
  const auto base = payoffs_from_costs(inst, costs_from_budgets(inst, inst.budgets()));
  for (int k = 1; k <= kReachProbes; ++k) {
    const double frac = std::ldexp(1.0, -k);
    try {
      const auto u = payoffs_from_costs(
          inst, costs_from_budgets(inst, transferred_budgets(inst, a, b, frac * inst.budget(a))));
      if (u[a] - base[a] > benefit_threshold(base[a]) && u[b] - base[b] > benefit_threshold(base[b]))
        return frac;
    } catch (const ConvergenceError&) {
    }
  }
  return 0.0;
}

/// Inserts two nodes between the recipient (last node) and its neighbor,
/// keeping the rest of the path. The new costs and values are drawn around the
/// neighbor's cost (scaled by |b1_seed|) and the last edge's value; of the
/// first kExtensionCandidates draws whose certificate holds for the new
/// endpoints, the one with the largest benefit reach is kept.
inline LineLadder extend_line(const LineLadder& ladder, const ExtensionControls& controls,
                              std::uint64_t seed = 0) {
  const ExtensionControls checked =
      make_extension_controls(ladder, controls.eta1, controls.eta2, controls.b1_seed);
  const std::size_t m = ladder.n;
  certify(ladder.instance(), 0, m - 1);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> spread(-4.0, 4.0);
  const double lam_center = ladder.lambda[m - 2] * std::abs(checked.b1_seed);
  const double v_center = ladder.values.back();

  std::vector<double> lambda(ladder.lambda.values().begin(), ladder.lambda.values().end() - 1);
  std::vector<double> values(ladder.values.begin(), ladder.values.end() - 1);
  std::optional<LineLadder> best;
  double best_reach = -1.0;
  int certified = 0;
  for (int attempt = 0; attempt < kExtensionAttempts && certified < kExtensionCandidates;
       ++attempt) {
    std::vector<double> lam = lambda;
    lam.push_back(lam_center * std::exp(spread(rng)));
    lam.push_back(lam_center * std::exp(spread(rng)));
    lam.push_back(ladder.lambda[m - 1]);
    std::vector<double> vals = values;
    for (int k = 0; k < 3; ++k) vals.push_back(v_center * std::exp(spread(rng)));
    LineLadder next = make_ladder(CostProfile(std::move(lam)), std::move(vals), false);
    const ContestInstance inst = next.instance();
    try {
      const auto s = transfer_derivative_at(inst, next.lambda, 0, next.n - 1);
      if (!s.mutually_beneficial()) continue;
      certify(inst, 0, next.n - 1);
    } catch (const SingularSystemError&) {
      continue;
    } catch (const CertificateError&) {
      continue;
    }
    ++certified;
    const double reach = benefit_reach(inst, 0, next.n - 1);
    if (reach > best_reach) {
      best_reach = reach;
      best = std::move(next);
    }
  }
  if (best) return *best;
  throw CertificateError("no certified extension to " + std::to_string(m + 2) + " nodes after " +
                         std::to_string(kExtensionAttempts) + " attempts");
}

/// Derivative signs after adding edge (0, n-1) of value v_close to a path at
/// fixed costs, via a rank-2 update of the path's transposed Jacobian.
struct CycleClosureCheck {
  double v_close = 0.0;
  double ds = 0.0;  // delta^T s~ for the donor (node 0)
  double dt = 0.0;  // delta^T t~ for the recipient (node n-1)
  Matrix block;     // w * [[-2 l_n, l_n - l_1], [l_1 - l_n, -2 l_1]]
  Vector dg_donor;  // change of the donor's payoff gradient
  Vector dg_recipient;

  bool holds() const noexcept { return ds > 0.0 && dt > 0.0; }
};

inline CycleClosureCheck closure_check(const LineLadder& line, double v_close) {
  if (line.cyclic) throw TopologyError("closure expects a path");
  const std::size_t n = line.n;
  const auto m = static_cast<Eigen::Index>(n);
  const ContestInstance inst = line.instance();
  const Matrix q = line.jacobian().transpose();
  const Vector g_a = payoff_gradient(inst, line.lambda, 0);
  const Vector g_b = payoff_gradient(inst, line.lambda, n - 1);

  const double l1 = line.lambda[0], ln = line.lambda[n - 1];
  const double s = l1 + ln;
  const double w = v_close / (s * s * s);
  CycleClosureCheck out;
  out.v_close = v_close;
  out.block = Matrix(2, 2);
  out.block << -2.0 * ln, ln - l1, l1 - ln, -2.0 * l1;
  out.block *= w;
  out.dg_donor = Vector::Zero(m);
  out.dg_donor[0] = -v_close * ln / (s * s);
  out.dg_donor[m - 1] = v_close * l1 / (s * s);
  out.dg_recipient = Vector::Zero(m);
  out.dg_recipient[m - 1] = -v_close * l1 / (s * s);
  out.dg_recipient[0] = v_close * ln / (s * s);

  // (Q + U C V)^{-1} = Q^{-1} - Q^{-1} U (I + C V Q^{-1} U)^{-1} C V Q^{-1}
  Matrix u = Matrix::Zero(m, 2);
  u(0, 0) = 1.0;
  u(m - 1, 1) = 1.0;
  const Matrix v = u.transpose();
  const Matrix q_inv_u = solve_checked(q, u);
  const Matrix cap = Matrix::Identity(2, 2) + out.block * v * q_inv_u;
  auto apply = [&](const Vector& rhs) {
    const Vector q_inv_rhs = solve_checked(q, rhs);
    return Vector(q_inv_rhs - q_inv_u * solve_checked(cap, Vector(out.block * v * q_inv_rhs)));
  };
  const Vector s_t = apply(g_a + out.dg_donor);
  const Vector t_t = apply(g_b + out.dg_recipient);
  out.ds = s_t[m - 1] - s_t[0];
  out.dt = t_t[m - 1] - t_t[0];
  return out;
}

inline constexpr int kMaxHalvings = 80;

/// Adds edge (0, n-1) to a certified path with donor 0 and recipient n-1,
/// halving its value from the mean edge value until the certificate holds
/// and some probed transfer is beneficial.
inline CertifiedInstance close_cycle(const CertifiedInstance& line,
                                     std::optional<double> initial_value = std::nullopt) {
  const std::size_t n = line.instance.size();
  if (line.certificate.donor != 0 || line.certificate.recipient != n - 1)
    throw PreconditionError("closure expects donor 0 and recipient n-1");
  verify_certificate(line);
  const CostProfile costs = costs_from_budgets(line.instance, line.instance.budgets());
  const LineLadder ladder = ladder_from_instance(line.instance, costs);
  if (ladder.cyclic) throw TopologyError("instance is already a cycle");

  double v_close = initial_value.value_or(
      std::accumulate(ladder.values.begin(), ladder.values.end(), 0.0) /
      static_cast<double>(ladder.values.size()));
  for (int k = 0; k <= kMaxHalvings; ++k, v_close *= 0.5) {
    if (!closure_check(ladder, v_close).holds()) continue;
    std::vector<double> values = ladder.values;
    values.push_back(v_close);
    const ContestInstance cycle = make_ladder(costs, std::move(values), true).instance();
    try {
      Certificate cert = certify(cycle, 0, n - 1);
      if (benefit_reach(cycle, 0, n - 1) > 0.0) return {cycle, cert};
    } catch (const CertificateError&) {
    }
  }
  throw SearchExhaustedError("no closing edge value certified after " +
                             std::to_string(kMaxHalvings) + " halvings");
}

/// Certified path with donor 0 and recipient n-1 for any n >= 3, grown from
/// the base line of matching parity.
inline CertifiedInstance certified_line(std::size_t n, std::uint64_t seed = 0,
                                        std::optional<ExtensionControls> controls = std::nullopt) {
  if (n < 3) throw PreconditionError("a certified line needs at least 3 nodes");
  const BaseLines bases = base_line_instances();
  const CertifiedInstance& base = n % 2 == 1 ? bases.line3 : bases.line4;
  if (base.instance.size() == n) return base;
  LineLadder ladder = ladder_from_instance(
      base.instance, costs_from_budgets(base.instance, base.instance.budgets()));
  while (ladder.n < n) {
    const ExtensionControls c =
        controls ? make_extension_controls(ladder, controls->eta1, controls->eta2,
                                           controls->b1_seed)
                 : make_extension_controls(ladder);
    ladder = extend_line(ladder, c, seed + ladder.n);
  }
  ContestInstance inst = ladder.instance();
  Certificate cert = certify(inst, 0, n - 1);
  return {std::move(inst), cert};
}

struct ConstructOptions {
  std::uint64_t seed = 0;
  std::optional<ExtensionControls> controls;
};

/// Certified instance on an arbitrary graph for the transfer a -> b. Path
/// players take their costs from a certified line (closed into a cycle when
/// (a, b) is an edge); every other player gets the smallest path cost and
/// every other edge the value epsilon, halved until the certificate holds and
/// some probed transfer is beneficial.
inline CertifiedInstance construct_for_graph(const Topology& graph, Player a, Player b,
                                             const ConstructOptions& opts = {}) {
  if (a >= graph.size() || b >= graph.size()) throw IndexError("player index out of range");
  if (!connectivity_excluding(graph, a, b))
    throw HypothesisError("players " + std::to_string(a) + " and " + std::to_string(b) +
                          " are not connected once their own edge is removed");
  const std::vector<Player> path = *path_between(graph, a, b);
  CertifiedInstance core = certified_line(path.size(), opts.seed, opts.controls);
  if (graph.has_edge(a, b)) core = close_cycle(core);
  const CostProfile core_costs = costs_from_budgets(core.instance, core.instance.budgets());

  const std::size_t n = graph.size();
  std::vector<long> slot(n, -1);
  for (std::size_t k = 0; k < path.size(); ++k) slot[path[k]] = static_cast<long>(k);
  const double lam_min =
      *std::min_element(core_costs.values().begin(), core_costs.values().end());
  std::vector<double> lambda(n, lam_min);
  for (std::size_t k = 0; k < path.size(); ++k) lambda[path[k]] = core_costs[k];

  std::vector<Edge> core_edges;
  std::vector<std::pair<Player, Player>> off_path;
  for (auto [i, j] : graph.pairs()) {
    if (slot[i] >= 0 && slot[j] >= 0) {
      const auto si = static_cast<Player>(slot[i]), sj = static_cast<Player>(slot[j]);
      if (!core.instance.has_edge(si, sj))
        throw TopologyError("path between " + std::to_string(a) + " and " + std::to_string(b) +
                            " has a chord");
      core_edges.push_back({i, j, core.instance.value(si, sj)});
    } else {
      off_path.emplace_back(i, j);
    }
  }
  const CostProfile costs(std::move(lambda));
  auto build = [&](double eps) {
    std::vector<Edge> edges = core_edges;
    for (auto [i, j] : off_path) edges.push_back({i, j, eps});
    ContestInstance shape(std::vector<double>(n, 1.0), std::move(edges));
    return shape.with_budgets(budgets_from_costs(shape, costs));
  };
  if (off_path.empty()) {
    ContestInstance inst = build(0.0);
    Certificate cert = certify(inst, a, b);
    return {std::move(inst), cert};
  }

  double eps = std::accumulate(core_edges.begin(), core_edges.end(), 0.0,
                               [](double acc, const Edge& e) { return acc + e.value; }) /
               static_cast<double>(core_edges.size());
  for (int k = 0; k <= kMaxHalvings; ++k, eps *= 0.5) {
    ContestInstance inst = build(eps);
    try {
      Certificate cert = certify(inst, a, b, eps);
      if (benefit_reach(inst, a, b) > 0.0) return {std::move(inst), cert};
    } catch (const CertificateError&) {
    }
  }
  throw SearchExhaustedError("no off-path value certified after " + std::to_string(kMaxHalvings) +
                             " halvings");
}

}  // namespace netcontest
