#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "netcontest/errors.hpp"

namespace netcontest {

using Player = std::size_t;

struct Edge {
  Player i = 0;
  Player j = 0;
  double value = 0.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct Neighbor {
  Player player = 0;
  double value = 0.0;
};

/// Positive payoff derivatives at zero transfer, attached to constructed instances.
struct Certificate {
  Player donor = 0;
  Player recipient = 0;
  double dU_donor = 0.0;
  double dU_recipient = 0.0;
  double epsilon = 0.0;
};

/// Player j -> resources player i commits to the item shared with j.
using Allocation = std::map<Player, double>;
using AllocationProfile = std::vector<Allocation>;

/// Undirected conflict structure without values or budgets.
class Topology {
 public:
  Topology() = default;

  /// Normalizes each pair to (min, max) and sorts. Rejects self-loops,
  /// duplicates, out-of-range endpoints and isolated players.
  Topology(std::size_t n, std::vector<std::pair<Player, Player>> pairs) : n_(n) {
    if (n < 2) throw ValidationError("n", "need at least 2 players, got " + std::to_string(n));
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      auto [i, j] = pairs[k];
      const std::string field = "edges[" + std::to_string(k) + "]";
      if (i >= n || j >= n) throw ValidationError(field, "endpoint out of range");
      if (i == j) throw ValidationError(field, "self-loop");
      pairs[k] = {std::min(i, j), std::max(i, j)};
    }
    std::vector<std::size_t> order(pairs.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return pairs[x] < pairs[y]; });
    for (std::size_t k = 1; k < order.size(); ++k) {
      if (pairs[order[k]] == pairs[order[k - 1]])
        throw ValidationError("edges[" + std::to_string(order[k]) + "]", "duplicate edge");
    }
    adjacency_.assign(n, {});
    for (std::size_t k : order) {
      pairs_.push_back(pairs[k]);
      adjacency_[pairs[k].first].push_back(pairs[k].second);
      adjacency_[pairs[k].second].push_back(pairs[k].first);
    }
    for (auto& adj : adjacency_) std::sort(adj.begin(), adj.end());
    for (Player i = 0; i < n; ++i) {
      if (adjacency_[i].empty())
        throw ValidationError("players[" + std::to_string(i) + "]", "isolated player");
    }
  }

  std::size_t size() const noexcept { return n_; }
  const std::vector<std::pair<Player, Player>>& pairs() const noexcept { return pairs_; }
  /// Sorted ascending.
  const std::vector<Player>& adjacent(Player i) const { return adjacency_.at(i); }
  bool has_edge(Player i, Player j) const {
    if (i >= n_ || j >= n_) return false;
    const auto& adj = adjacency_[i];
    return std::binary_search(adj.begin(), adj.end(), j);
  }

 private:
  std::size_t n_ = 0;
  std::vector<std::pair<Player, Player>> pairs_;
  std::vector<std::vector<Player>> adjacency_;
};

/// Directed donation arcs (donor, recipient).
class DonationGraph {
 public:
  DonationGraph() = default;
  explicit DonationGraph(std::vector<std::pair<Player, Player>> arcs) {
    for (std::size_t k = 0; k < arcs.size(); ++k) {
      const std::string field = "donation_arcs[" + std::to_string(k) + "]";
      if (arcs[k].first == arcs[k].second) throw ValidationError(field, "donor equals recipient");
      if (!arcs_.insert(arcs[k]).second) throw ValidationError(field, "duplicate arc");
    }
  }

  /// An undirected edge list expands to arcs in both directions.
  static DonationGraph undirected(const std::vector<std::pair<Player, Player>>& edges) {
    std::vector<std::pair<Player, Player>> arcs;
    for (auto [i, j] : edges) {
      arcs.emplace_back(i, j);
      arcs.emplace_back(j, i);
    }
    return DonationGraph(std::move(arcs));
  }

  const std::set<std::pair<Player, Player>>& arcs() const noexcept { return arcs_; }
  bool empty() const noexcept { return arcs_.empty(); }

  /// D_i: the donor itself followed by its recipients, ascending.
  std::vector<Player> options(Player i) const {
    std::vector<Player> out{i};
    for (auto it = arcs_.lower_bound({i, 0}); it != arcs_.end() && it->first == i; ++it)
      out.push_back(it->second);
    std::sort(out.begin(), out.end());
    return out;
  }

  void check_range(std::size_t n) const {
    std::size_t k = 0;
    for (auto [from, to] : arcs_) {
      if (from >= n || to >= n)
        throw ValidationError("donation_arcs[" + std::to_string(k) + "]", "endpoint out of range");
      ++k;
    }
  }

 private:
  std::set<std::pair<Player, Player>> arcs_;
};

/// Conflict graph with item values and player budgets. Immutable once built.
class ContestInstance {
 public:
  ContestInstance() = default;

  ContestInstance(std::vector<double> budgets, std::vector<Edge> edges,
                  DonationGraph donations = {})
      : budgets_(std::move(budgets)), donations_(std::move(donations)) {
    const std::size_t n = budgets_.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(budgets_[i]) || budgets_[i] <= 0.0)
        throw ValidationError("budgets[" + std::to_string(i) + "]", "budget must be positive");
    }
    std::vector<std::pair<Player, Player>> pairs;
    pairs.reserve(edges.size());
    for (std::size_t k = 0; k < edges.size(); ++k) {
      if (!std::isfinite(edges[k].value) || edges[k].value <= 0.0)
        throw ValidationError("edges[" + std::to_string(k) + "]", "item value must be positive");
      pairs.emplace_back(edges[k].i, edges[k].j);
    }
    topology_ = Topology(n, pairs);
    donations_.check_range(n);

    std::map<std::pair<Player, Player>, double> by_pair;
    for (const Edge& e : edges) by_pair[{std::min(e.i, e.j), std::max(e.i, e.j)}] = e.value;
    neighbors_.assign(n, {});
    for (const auto& [pair, value] : by_pair) {
      edges_.push_back({pair.first, pair.second, value});
      neighbors_[pair.first].push_back({pair.second, value});
      neighbors_[pair.second].push_back({pair.first, value});
    }
    for (auto& row : neighbors_)
      std::sort(row.begin(), row.end(),
                [](const Neighbor& a, const Neighbor& b) { return a.player < b.player; });
  }

  std::size_t size() const noexcept { return budgets_.size(); }
  std::span<const double> budgets() const noexcept { return budgets_; }
  double budget(Player i) const { return budgets_.at(i); }
  /// Sorted by (i, j) with i < j.
  std::span<const Edge> edges() const noexcept { return edges_; }
  std::span<const Neighbor> neighbors(Player i) const { return neighbors_.at(i); }
  const Topology& topology() const noexcept { return topology_; }
  const DonationGraph& donations() const noexcept { return donations_; }

  /// v_{i,j}; zero when (i, j) is not an edge.
  double value(Player i, Player j) const {
    for (const Neighbor& nb : neighbors_.at(i))
      if (nb.player == j) return nb.value;
    return 0.0;
  }
  bool has_edge(Player i, Player j) const { return topology_.has_edge(i, j); }

  double total_value() const noexcept {
    double sum = 0.0;
    for (const Edge& e : edges_) sum += e.value;
    return sum;
  }

  ContestInstance with_budgets(std::vector<double> budgets) const {
    if (budgets.size() != size())
      throw ShapeError("expected " + std::to_string(size()) + " budgets, got " +
                       std::to_string(budgets.size()));
    return ContestInstance(std::move(budgets), edges_, donations_);
  }

  ContestInstance with_donations(DonationGraph donations) const {
    return ContestInstance(budgets_, edges_, std::move(donations));
  }

  friend bool operator==(const ContestInstance& a, const ContestInstance& b) {
    return a.budgets_ == b.budgets_ && a.edges_ == b.edges_ &&
           a.donations_.arcs() == b.donations_.arcs();
  }

 private:
  std::vector<double> budgets_;
  std::vector<Edge> edges_;
  std::vector<std::vector<Neighbor>> neighbors_;
  Topology topology_;
  DonationGraph donations_;
};

namespace detail {

inline void check_pair(const Topology& g, Player a, Player b) {
  if (a >= g.size() || b >= g.size())
    throw IndexError("player index out of range (n = " + std::to_string(g.size()) + ")");
  if (a == b) throw PreconditionError("players must differ");
}

/// BFS over E \ {(a, b)}; neighbors visited in ascending order so the first
/// shortest path found is the lexicographically smallest one.
inline std::optional<std::vector<Player>> bfs_path(const Topology& g, Player a, Player b) {
  std::vector<std::optional<Player>> parent(g.size());
  std::vector<bool> seen(g.size(), false);
  std::queue<Player> frontier;
  frontier.push(a);
  seen[a] = true;
  while (!frontier.empty()) {
    Player u = frontier.front();
    frontier.pop();
    for (Player w : g.adjacent(u)) {
      if ((u == a && w == b) || (u == b && w == a)) continue;
      if (seen[w]) continue;
      seen[w] = true;
      parent[w] = u;
      if (w == b) {
        std::vector<Player> path{b};
        while (path.back() != a) path.push_back(*parent[path.back()]);
        std::reverse(path.begin(), path.end());
        return path;
      }
      frontier.push(w);
    }
  }
  return std::nullopt;
}

}  // namespace detail

/// True iff a and b are connected once the edge (a, b) itself is removed.
inline bool connectivity_excluding(const Topology& g, Player a, Player b) {
  detail::check_pair(g, a, b);
  return detail::bfs_path(g, a, b).has_value();
}
inline bool connectivity_excluding(const ContestInstance& inst, Player a, Player b) {
  return connectivity_excluding(inst.topology(), a, b);
}

/// Shortest path from a to b avoiding the edge (a, b); ties go to the lowest-index neighbor.
inline std::optional<std::vector<Player>> path_between(const Topology& g, Player a, Player b) {
  detail::check_pair(g, a, b);
  return detail::bfs_path(g, a, b);
}
inline std::optional<std::vector<Player>> path_between(const ContestInstance& inst, Player a,
                                                       Player b) {
  return path_between(inst.topology(), a, b);
}

}  // namespace netcontest
