#include "epinet/removal.hpp"

#include <algorithm>
#include <stdexcept>

namespace epinet {

namespace {

void validate_budget(const Graph& g, int budget) {
  if (budget < 0 || budget > g.node_count())
    throw std::invalid_argument("node removal: budget must be in [0, n]");
}

void mask_node(Eigen::MatrixXd& a, int v) {
  a.row(v).setZero();
  a.col(v).setZero();
}

double masked_lambda(Eigen::MatrixXd a, const std::vector<int>& removed) {
  for (int v : removed) mask_node(a, v);
  return lambda_max(a).lambda_max;
}

}  // namespace

NodeRemovalResult remove_nodes_exact(const Graph& g, int budget) {
  validate_budget(g, budget);
  const int n = g.node_count();
  if (n > 15)
    throw std::invalid_argument(
        "remove_nodes_exact: enumeration limited to n <= 15; use "
        "remove_nodes_greedy for larger graphs");
  const Eigen::MatrixXd a = g.adjacency();
  if (budget == 0) return {{}, lambda_max(a).lambda_max};

  std::vector<int> pick(budget);
  for (int i = 0; i < budget; ++i) pick[i] = i;
  std::vector<int> best;
  double best_lambda = 0.0;
  bool first = true;
  while (true) {
    double lam = masked_lambda(a, pick);
    // Enumeration is lexicographic, so on a tie the incumbent already is the
    // lexicographically smallest set.
    if (first || lam < best_lambda - 1e-12) {
      best = pick;
      best_lambda = lam;
      first = false;
    }
    // next combination
    int i = budget - 1;
    while (i >= 0 && pick[i] == n - budget + i) --i;
    if (i < 0) break;
    ++pick[i];
    for (int j = i + 1; j < budget; ++j) pick[j] = pick[j - 1] + 1;
  }
  return {best, best_lambda};
}

NodeRemovalResult remove_nodes_greedy(const Graph& g, int budget, NodeScore score) {
  validate_budget(g, budget);
  const int n = g.node_count();
  Eigen::MatrixXd a = g.adjacency();
  std::vector<char> gone(n, 0);
  std::vector<int> removed;
  for (int round = 0; round < budget; ++round) {
    int pick = -1;
    double best = -1.0;
    if (score == NodeScore::Degree) {
      for (int v = 0; v < n; ++v) {
        if (gone[v]) continue;
        int deg = 0;
        for (int j = 0; j < n; ++j) deg += (a(v, j) != 0.0) + (a(j, v) != 0.0);
        if (static_cast<double>(deg) > best) {
          best = deg;
          pick = v;
        }
      }
    } else {
      SpectralResult s = lambda_max(a);
      for (int v = 0; v < n; ++v) {
        if (gone[v]) continue;
        double val = s.left(v) * s.right(v);
        if (val > best) {
          best = val;
          pick = v;
        }
      }
    }
    gone[pick] = 1;
    mask_node(a, pick);
    removed.push_back(pick);
  }
  std::sort(removed.begin(), removed.end());
  return {removed, lambda_max(a).lambda_max};
}

LinkRemovalResult remove_links_greedy(const Graph& g, int budget) {
  if (budget < 0 || budget > g.edge_count())
    throw std::invalid_argument("link removal: budget must be in [0, edge count]");
  const int n = g.node_count();
  Eigen::MatrixXd a = g.adjacency();
  LinkRemovalResult result;
  for (int round = 0; round < budget; ++round) {
    SpectralResult s = lambda_max(a);
    int bu = -1, bv = -1;
    double best = -1.0;
    // a(v, u) is the weight of edge u -> v; its first-order effect on
    // lambda_max is proportional to left_v * right_u.
    for (int u = 0; u < n; ++u)
      for (int v = 0; v < n; ++v) {
        if (u == v || a(v, u) == 0.0) continue;
        double val = s.left(v) * s.right(u);
        if (val > best) {
          best = val;
          bu = u;
          bv = v;
        }
      }
    if (bu < 0) break;  // no edges left
    a(bv, bu) = 0.0;
    result.removed.emplace_back(bu, bv);
  }
  result.lambda_max = lambda_max(a).lambda_max;
  return result;
}

}  // namespace epinet
