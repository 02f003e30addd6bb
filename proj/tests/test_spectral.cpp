#include "epinet/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "doctest.h"
#include "epinet/graph.hpp"
#include "epinet/removal.hpp"
#include "epinet/rng.hpp"

using namespace epinet;

namespace {

// Independent oracle: dense eigensolver; for nonnegative / Metzler matrices
// the dominant eigenvalue is real and equals the largest real part.
double dense_lambda(const Eigen::MatrixXd& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(m);
  double best = es.eigenvalues()(0).real();
  for (int i = 1; i < es.eigenvalues().size(); ++i)
    best = std::max(best, es.eigenvalues()(i).real());
  return best;
}

Graph random_strongly_connected(int n, double extra_p, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Graph g(n);
  for (int i = 0; i < n; ++i) g.add_edge(i, (i + 1) % n, 0.5 + rng.next_double());
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v) {
      if (u == v || g.has_edge(u, v)) continue;
      if (rng.next_double() < extra_p) g.add_edge(u, v, 0.5 + rng.next_double());
    }
  return g;
}

}  // namespace

TEST_CASE("complete and star graphs have known spectral radii") {
  CHECK(lambda_max(make_complete(4).adjacency()).lambda_max == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(lambda_max(make_star(5).adjacency()).lambda_max ==
        doctest::Approx(2.0).epsilon(1e-12));
  for (int n = 4; n <= 10; ++n) {
    CHECK(std::abs(lambda_max(make_complete(n).adjacency()).lambda_max - (n - 1)) <=
          1e-10);
    CHECK(std::abs(lambda_max(make_star(n).adjacency()).lambda_max -
                   std::sqrt(n - 1.0)) <= 1e-10);
  }
}

TEST_CASE("power iteration matches a dense eigensolver on a random weighted digraph") {
  Graph g = random_strongly_connected(6, 0.3, 11);
  auto a = g.adjacency();
  SpectralResult s = lambda_max(a);
  CHECK(s.lambda_max == doctest::Approx(dense_lambda(a)).epsilon(1e-8));
  CHECK(s.residual <= 1e-10);
  CHECK((a * s.right - s.lambda_max * s.right).lpNorm<Eigen::Infinity>() <= 1e-10);
  CHECK((a.transpose() * s.left - s.lambda_max * s.left).lpNorm<Eigen::Infinity>() <=
        1e-10);
  // strictly positive Perron pair on an irreducible matrix
  CHECK(s.right.minCoeff() > 0.0);
  CHECK(s.left.minCoeff() > 0.0);
  CHECK(s.right.sum() == doctest::Approx(1.0));
  CHECK(s.left.sum() == doctest::Approx(1.0));
}

TEST_CASE("metzler matrices are handled through the diagonal shift") {
  Graph g = random_strongly_connected(5, 0.4, 23);
  Eigen::MatrixXd m = g.adjacency();
  m.diagonal() -= Eigen::VectorXd::Constant(5, 3.0);
  SpectralResult s = lambda_max(m);
  CHECK(s.lambda_max == doctest::Approx(dense_lambda(m)).epsilon(1e-8));
}

TEST_CASE("shift invariance: lambda(M + cI) = lambda(M) + c") {
  Graph g = random_strongly_connected(7, 0.25, 5);
  Eigen::MatrixXd m = g.adjacency();
  double base = lambda_max(m).lambda_max;
  for (double c : {0.5, 2.0, 10.0}) {
    Eigen::MatrixXd shifted = m + c * Eigen::MatrixXd::Identity(7, 7);
    CHECK(std::abs(lambda_max(shifted).lambda_max - (base + c)) <= 1e-10);
  }
}

TEST_CASE("symmetric graphs give equal left and right vectors") {
  Graph g = make_erdos_renyi(9, 0.5, 3);
  SpectralResult s = lambda_max(g.adjacency());
  CHECK((s.left - s.right).lpNorm<Eigen::Infinity>() <= 1e-8);
}

TEST_CASE("degenerate and invalid matrices") {
  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(3, 3);
  CHECK(lambda_max(zero).lambda_max == doctest::Approx(0.0));

  Eigen::MatrixXd rect(2, 3);
  CHECK_THROWS_AS(lambda_max(rect), std::invalid_argument);

  Eigen::MatrixXd neg = Eigen::MatrixXd::Zero(2, 2);
  neg(0, 1) = -1.0;
  CHECK_THROWS_AS(lambda_max(neg), std::invalid_argument);
}

TEST_CASE("exact node removal on the star takes the hub") {
  Graph g = make_star(5);
  auto r = remove_nodes_exact(g, 1);
  CHECK(r.removed == std::vector<int>{0});
  CHECK(r.lambda_max == doctest::Approx(0.0));

  auto none = remove_nodes_exact(g, 0);
  CHECK(none.removed.empty());
  CHECK(none.lambda_max == doctest::Approx(2.0));

  auto all = remove_nodes_exact(g, 5);
  CHECK(all.removed.size() == 5);
  CHECK(all.lambda_max == doctest::Approx(0.0));
}

TEST_CASE("exact node removal refuses large graphs") {
  CHECK_THROWS_AS(remove_nodes_exact(make_complete(16), 2), std::invalid_argument);
}

TEST_CASE("greedy node removal: ties and scores") {
  auto star = remove_nodes_greedy(make_star(5), 1, NodeScore::Degree);
  CHECK(star.removed == std::vector<int>{0});

  auto k4 = remove_nodes_greedy(make_complete(4), 1, NodeScore::Degree);
  CHECK(k4.removed == std::vector<int>{0});  // symmetric tie -> smallest index

  auto perron = remove_nodes_greedy(make_star(5), 1, NodeScore::PerronProduct);
  CHECK(perron.removed == std::vector<int>{0});
}

TEST_CASE("greedy never beats the exact enumeration") {
  Graph g = make_erdos_renyi(8, 0.5, 7);
  auto exact = remove_nodes_exact(g, 2);
  for (NodeScore score : {NodeScore::Degree, NodeScore::PerronProduct}) {
    auto greedy = remove_nodes_greedy(g, 2, score);
    CHECK(greedy.lambda_max >= exact.lambda_max - 1e-9);
  }
}

TEST_CASE("link removal on the 2-node pair kills the spectrum") {
  Graph pair(2);
  pair.add_undirected_edge(0, 1);
  CHECK(lambda_max(pair.adjacency()).lambda_max == doctest::Approx(1.0));
  auto r = remove_links_greedy(pair, 1);
  CHECK(r.removed.size() == 1);
  CHECK(r.lambda_max == doctest::Approx(0.0));

  auto keep = remove_links_greedy(pair, 0);
  CHECK(keep.removed.empty());
  CHECK(keep.lambda_max == doctest::Approx(1.0));
}

TEST_CASE("greedy link removal vs exhaustive pair enumeration") {
  Graph g = random_strongly_connected(6, 0.35, 17);
  auto greedy = remove_links_greedy(g, 2);

  // enumerate all unordered pairs of directed edges
  const auto& edges = g.edges();
  double best = lambda_max(g.adjacency()).lambda_max;
  for (std::size_t a = 0; a < edges.size(); ++a)
    for (std::size_t b = a + 1; b < edges.size(); ++b) {
      Eigen::MatrixXd m = g.adjacency();
      m(edges[a].dst, edges[a].src) = 0.0;
      m(edges[b].dst, edges[b].src) = 0.0;
      best = std::min(best, lambda_max(m).lambda_max);
    }
  double gap = greedy.lambda_max - best;
  CHECK(gap >= -1e-9);  // greedy can only lose to the optimum
  MESSAGE("greedy-vs-exact link gap: ", gap);
}

TEST_CASE("removing nodes or links never raises the spectral radius") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Graph g = make_erdos_renyi(9, 0.4, seed * 13 + 1);
    double lam = lambda_max(g.adjacency()).lambda_max;
    SplitMix64 rng(seed);
    int v = static_cast<int>(rng.next_u64() % 9);
    Eigen::MatrixXd masked = g.adjacency();
    masked.row(v).setZero();
    masked.col(v).setZero();
    CHECK(lambda_max(masked).lambda_max <= lam + 1e-10);
    if (g.edge_count() > 0) {
      const Edge& e = g.edges()[rng.next_u64() % g.edge_count()];
      Eigen::MatrixXd m2 = g.adjacency();
      m2(e.dst, e.src) = 0.0;
      CHECK(lambda_max(m2).lambda_max <= lam + 1e-10);
    }
  }
}
