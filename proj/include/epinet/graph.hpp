#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace epinet {

struct Edge {
  int src = 0;
  int dst = 0;
  double weight = 1.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Directed weighted graph on nodes 0..n-1. An edge (src, dst, w) means
/// "src can affect dst" (infection flows src -> dst). No self-loops;
/// weights are strictly positive. Edges are kept sorted by (src, dst).
class Graph {
 public:
  Graph() = default;
  explicit Graph(int n);

  int node_count() const { return n_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }

  void add_edge(int src, int dst, double weight = 1.0);
  /// Adds src->dst and dst->src with the same weight.
  void add_undirected_edge(int a, int b, double weight = 1.0);

  bool has_edge(int src, int dst) const;
  double weight(int src, int dst) const;

  /// True when for every edge (u,v,w) the reverse edge (v,u,w) exists.
  bool is_symmetric() const;
  bool is_strongly_connected() const;

  /// Adjacency matrix in the "affected by" orientation used by the spreading
  /// dynamics: a(i, j) = weight of edge j -> i, so row i collects the
  /// influences acting on node i (its in-neighbors).
  Eigen::MatrixXd adjacency() const;

  std::vector<int> in_neighbors(int v) const;
  std::vector<int> out_neighbors(int v) const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
};

Graph make_complete(int n);
Graph make_star(int n);
Graph make_path(int n);
Graph make_grid(int rows, int cols);
Graph make_erdos_renyi(int n, double p, std::uint64_t seed);

/// Parses the edge-list text format:
///   # comment
///   n <node count>
///   src dst [weight]
/// Nodes are 0-indexed; weight defaults to 1. Throws std::invalid_argument
/// with the offending line on malformed input, out-of-range indices,
/// non-positive weights, self-loops, or duplicate edges.
Graph load_edge_list(const std::string& text);
Graph load_edge_list_file(const std::string& path);

/// Canonical form: header line, then edges sorted by (src, dst); the weight
/// column is omitted when it equals 1. load(save(g)) == g.
std::string save_edge_list(const Graph& g);

}  // namespace epinet
