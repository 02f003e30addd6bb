#pragma once

#include <utility>
#include <vector>

#include "epinet/graph.hpp"
#include "epinet/spectral.hpp"

namespace epinet {

enum class NodeScore { Degree, PerronProduct };

struct NodeRemovalResult {
  std::vector<int> removed;  // ascending
  double lambda_max = 0.0;   // spectral radius of the reduced graph
};

struct LinkRemovalResult {
  std::vector<std::pair<int, int>> removed;  // (src, dst) pairs, removal order
  double lambda_max = 0.0;
};

/// Globally optimal node set of size `budget` minimizing the spectral radius
/// of the induced subgraph; enumerates all subsets, so n <= 15. Ties are
/// broken toward the lexicographically smallest node set. Throws
/// std::invalid_argument for larger graphs, pointing at the greedy variant.
NodeRemovalResult remove_nodes_exact(const Graph& g, int budget);

/// Removes `budget` nodes one at a time, rescoring after every removal.
/// Degree scores by in-degree + out-degree; PerronProduct scores node i by
/// left_i * right_i of the current Perron pair. Ties go to the smallest node
/// index.
NodeRemovalResult remove_nodes_greedy(const Graph& g, int budget, NodeScore score);

/// Removes `budget` directed links one at a time. Edge (u, v) is scored by
/// left_v * right_u, the first-order sensitivity of lambda_max to that entry;
/// ties go to the lexicographically smallest (src, dst).
LinkRemovalResult remove_links_greedy(const Graph& g, int budget);

}  // namespace epinet
