#include "epinet/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "epinet/rng.hpp"

namespace epinet {

Graph::Graph(int n) : n_(n) {
  if (n < 0) throw std::invalid_argument("graph: node count must be >= 0");
}

void Graph::add_edge(int src, int dst, double weight) {
  if (src < 0 || src >= n_ || dst < 0 || dst >= n_)
    throw std::invalid_argument("graph: edge (" + std::to_string(src) + ", " +
                                std::to_string(dst) + ") out of range for n=" +
                                std::to_string(n_));
  if (src == dst)
    throw std::invalid_argument("graph: self-loop at node " + std::to_string(src));
  if (!(weight > 0.0) || !std::isfinite(weight))
    throw std::invalid_argument("graph: edge (" + std::to_string(src) + ", " +
                                std::to_string(dst) + ") has non-positive weight");
  Edge e{src, dst, weight};
  auto it = std::lower_bound(edges_.begin(), edges_.end(), e,
                             [](const Edge& a, const Edge& b) {
                               return std::pair{a.src, a.dst} < std::pair{b.src, b.dst};
                             });
  if (it != edges_.end() && it->src == src && it->dst == dst)
    throw std::invalid_argument("graph: duplicate edge (" + std::to_string(src) +
                                ", " + std::to_string(dst) + ")");
  edges_.insert(it, e);
}

void Graph::add_undirected_edge(int a, int b, double weight) {
  add_edge(a, b, weight);
  add_edge(b, a, weight);
}

bool Graph::has_edge(int src, int dst) const {
  Edge probe{src, dst, 1.0};
  auto it = std::lower_bound(edges_.begin(), edges_.end(), probe,
                             [](const Edge& a, const Edge& b) {
                               return std::pair{a.src, a.dst} < std::pair{b.src, b.dst};
                             });
  return it != edges_.end() && it->src == src && it->dst == dst;
}

double Graph::weight(int src, int dst) const {
  Edge probe{src, dst, 1.0};
  auto it = std::lower_bound(edges_.begin(), edges_.end(), probe,
                             [](const Edge& a, const Edge& b) {
                               return std::pair{a.src, a.dst} < std::pair{b.src, b.dst};
                             });
  if (it == edges_.end() || it->src != src || it->dst != dst) return 0.0;
  return it->weight;
}

bool Graph::is_symmetric() const {
  for (const Edge& e : edges_)
    if (weight(e.dst, e.src) != e.weight) return false;
  return true;
}

namespace {

void reach(int start, const std::vector<std::vector<int>>& adj, std::vector<char>& seen) {
  std::vector<int> stack{start};
  seen[start] = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int w : adj[v])
      if (!seen[w]) {
        seen[w] = 1;
        stack.push_back(w);
      }
  }
}

}  // namespace

bool Graph::is_strongly_connected() const {
  if (n_ == 0) return false;
  if (n_ == 1) return true;
  std::vector<std::vector<int>> fwd(n_), rev(n_);
  for (const Edge& e : edges_) {
    fwd[e.src].push_back(e.dst);
    rev[e.dst].push_back(e.src);
  }
  std::vector<char> seen(n_, 0);
  reach(0, fwd, seen);
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) return false;
  std::fill(seen.begin(), seen.end(), 0);
  reach(0, rev, seen);
  return std::find(seen.begin(), seen.end(), 0) == seen.end();
}

Eigen::MatrixXd Graph::adjacency() const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_, n_);
  for (const Edge& e : edges_) a(e.dst, e.src) = e.weight;
  return a;
}

std::vector<int> Graph::in_neighbors(int v) const {
  std::vector<int> out;
  for (const Edge& e : edges_)
    if (e.dst == v) out.push_back(e.src);
  return out;
}

std::vector<int> Graph::out_neighbors(int v) const {
  std::vector<int> out;
  for (const Edge& e : edges_)
    if (e.src == v) out.push_back(e.dst);
  return out;
}

Graph make_complete(int n) {
  if (n < 1) throw std::invalid_argument("complete graph: n must be >= 1");
  Graph g(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) g.add_undirected_edge(i, j);
  return g;
}

Graph make_star(int n) {
  if (n < 1) throw std::invalid_argument("star graph: n must be >= 1");
  Graph g(n);
  for (int leaf = 1; leaf < n; ++leaf) g.add_undirected_edge(0, leaf);
  return g;
}

Graph make_path(int n) {
  if (n < 1) throw std::invalid_argument("path graph: n must be >= 1");
  Graph g(n);
  for (int i = 0; i + 1 < n; ++i) g.add_undirected_edge(i, i + 1);
  return g;
}

Graph make_grid(int rows, int cols) {
  if (rows < 1 || cols < 1)
    throw std::invalid_argument("grid graph: rows and cols must be >= 1");
  Graph g(rows * cols);
  auto id = [cols](int r, int c) { return r * cols + c; };
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) g.add_undirected_edge(id(r, c), id(r, c + 1));
      if (r + 1 < rows) g.add_undirected_edge(id(r, c), id(r + 1, c));
    }
  return g;
}

Graph make_erdos_renyi(int n, double p, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("erdos-renyi graph: n must be >= 1");
  if (p < 0.0 || p > 1.0)
    throw std::invalid_argument("erdos-renyi graph: p must be in [0, 1]");
  Graph g(n);
  SplitMix64 rng(seed);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.next_double() < p) g.add_undirected_edge(i, j);
  return g;
}

Graph load_edge_list(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  int n = -1;
  Graph g;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;  // blank / comment-only line
    auto fail = [&](const std::string& why) {
      throw std::invalid_argument("edge list line " + std::to_string(line_no) +
                                  ": " + why);
    };
    if (n < 0) {
      if (first != "n") fail("expected header 'n <count>'");
      if (!(ls >> n) || n < 0) fail("bad node count");
      std::string extra;
      if (ls >> extra) fail("trailing tokens after header");
      g = Graph(n);
      continue;
    }
    int src = 0, dst = 0;
    double w = 1.0;
    std::istringstream es(line);
    if (!(es >> src >> dst)) fail("expected 'src dst [weight]'");
    if (es >> w) {
      std::string extra;
      if (es >> extra) fail("trailing tokens after weight");
    } else {
      w = 1.0;
    }
    try {
      g.add_edge(src, dst, w);
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
  }
  if (n < 0) throw std::invalid_argument("edge list: missing 'n <count>' header");
  return g;
}

Graph load_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("edge list: cannot open file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_edge_list(ss.str());
}

std::string save_edge_list(const Graph& g) {
  std::ostringstream out;
  out << "n " << g.node_count() << "\n";
  char buf[64];
  for (const Edge& e : g.edges()) {
    out << e.src << " " << e.dst;
    if (e.weight != 1.0) {
      std::snprintf(buf, sizeof(buf), "%.17g", e.weight);
      out << " " << buf;
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace epinet
