#include "epinet/graph.hpp"

#include <algorithm>

#include "doctest.h"
#include "epinet/rng.hpp"

using namespace epinet;

TEST_CASE("complete graph has all directed pairs") {
  Graph g = make_complete(4);
  CHECK(g.node_count() == 4);
  CHECK(g.edge_count() == 12);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (i != j) CHECK(g.has_edge(i, j));
  CHECK(g.is_symmetric());
  CHECK(g.is_strongly_connected());
}

TEST_CASE("star wires the hub to every leaf both ways") {
  Graph g = make_star(5);
  CHECK(g.edge_count() == 8);
  for (int leaf = 1; leaf < 5; ++leaf) {
    CHECK(g.has_edge(0, leaf));
    CHECK(g.has_edge(leaf, 0));
  }
  CHECK_FALSE(g.has_edge(1, 2));
}

TEST_CASE("erdos-renyi with p=0 is empty, p=1 is complete, seeds reproduce") {
  CHECK(make_erdos_renyi(10, 0.0, 1).edge_count() == 0);
  CHECK(make_erdos_renyi(6, 1.0, 3).edge_count() == 30);
  Graph a = make_erdos_renyi(12, 0.4, 42);
  Graph b = make_erdos_renyi(12, 0.4, 42);
  Graph c = make_erdos_renyi(12, 0.4, 43);
  CHECK(a == b);
  CHECK(a.edges() != c.edges());
}

TEST_CASE("grid dims must match and wire a lattice") {
  Graph g = make_grid(2, 3);
  CHECK(g.node_count() == 6);
  // 2x3 lattice: 3 + 4 undirected edges
  CHECK(g.edge_count() == 14);
  CHECK(g.has_edge(0, 1));
  CHECK(g.has_edge(0, 3));
  CHECK_FALSE(g.has_edge(2, 3));
  CHECK_THROWS_AS(make_grid(0, 3), std::invalid_argument);
}

TEST_CASE("graph invariants: no self-loops, positive weights, no duplicates") {
  Graph g(3);
  CHECK_THROWS_AS(g.add_edge(1, 1), std::invalid_argument);
  CHECK_THROWS_AS(g.add_edge(0, 1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(g.add_edge(0, 1, -2.0), std::invalid_argument);
  CHECK_THROWS_AS(g.add_edge(0, 7), std::invalid_argument);
  g.add_edge(0, 1);
  CHECK_THROWS_AS(g.add_edge(0, 1, 2.0), std::invalid_argument);
}

TEST_CASE("edge list round trip") {
  Graph pair = load_edge_list("n 2\n0 1\n1 0\n");
  CHECK(pair.node_count() == 2);
  CHECK(pair.has_edge(0, 1));
  CHECK(pair.has_edge(1, 0));

  Graph weighted = load_edge_list("# comment\nn 2\n0 1 0.5\n");
  CHECK(weighted.weight(0, 1) == 0.5);

  CHECK(load_edge_list(save_edge_list(weighted)) == weighted);

  // 50-edge random graph: saving is a fixed point of save . load
  SplitMix64 rng(7);
  Graph big(30);
  int added = 0;
  while (added < 50) {
    int u = static_cast<int>(rng.next_u64() % 30);
    int v = static_cast<int>(rng.next_u64() % 30);
    double w = 0.25 + rng.next_double();
    if (u == v || big.has_edge(u, v)) continue;
    big.add_edge(u, v, w);
    ++added;
  }
  std::string text = save_edge_list(big);
  CHECK(save_edge_list(load_edge_list(text)) == text);
  CHECK(load_edge_list(text) == big);
}

TEST_CASE("edge list rejects malformed input with the line number") {
  CHECK_THROWS_AS(load_edge_list("0 1\n"), std::invalid_argument);  // no header
  CHECK_THROWS_AS(load_edge_list("n 2\nzero 1\n"), std::invalid_argument);
  CHECK_THROWS_AS(load_edge_list("n 2\n0 5\n"), std::invalid_argument);
  CHECK_THROWS_AS(load_edge_list("n 2\n0 1 -1\n"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(load_edge_list("n 3\n0 1 1 9\n"),
                       doctest::Contains("line 2"), std::invalid_argument);
}

TEST_CASE("adjacency orientation: a(i, j) holds the weight of edge j -> i") {
  Graph g(3);
  g.add_edge(0, 1, 2.0);  // 0 infects 1
  auto a = g.adjacency();
  CHECK(a(1, 0) == 2.0);
  CHECK(a(0, 1) == 0.0);
  CHECK(g.in_neighbors(1) == std::vector<int>{0});
  CHECK(g.out_neighbors(0) == std::vector<int>{1});
}

TEST_CASE("strong connectivity distinguishes orientation") {
  Graph cycle(3);
  cycle.add_edge(0, 1);
  cycle.add_edge(1, 2);
  cycle.add_edge(2, 0);
  CHECK(cycle.is_strongly_connected());
  CHECK_FALSE(cycle.is_symmetric());

  Graph chain(3);
  chain.add_edge(0, 1);
  chain.add_edge(1, 2);
  CHECK_FALSE(chain.is_strongly_connected());
}
