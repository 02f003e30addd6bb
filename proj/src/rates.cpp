#include "epinet/rates.hpp"

#include <stdexcept>

namespace epinet {

namespace {

void check_delta(const Eigen::VectorXd& delta) {
  if ((delta.array() <= 0.0).any())
    throw std::invalid_argument("rate model: recovery rates must be > 0");
}

}  // namespace

RateModel RateModel::homogeneous(const Graph& g, double beta, double delta) {
  if (beta < 0.0) throw std::invalid_argument("rate model: beta must be >= 0");
  if (delta <= 0.0) throw std::invalid_argument("rate model: delta must be > 0");
  RateModel m;
  m.delta = Eigen::VectorXd::Constant(g.node_count(), delta);
  m.beta = beta * g.adjacency();
  m.beta_scalar = beta;
  m.delta_scalar = delta;
  return m;
}

RateModel RateModel::node_rates(const Graph& g, const Eigen::VectorXd& beta,
                                const Eigen::VectorXd& delta) {
  const int n = g.node_count();
  if (beta.size() != n || delta.size() != n)
    throw std::invalid_argument("rate model: per-node rate vectors must have length n");
  if ((beta.array() < 0.0).any())
    throw std::invalid_argument("rate model: beta must be >= 0");
  check_delta(delta);
  RateModel m;
  m.delta = delta;
  m.beta = g.adjacency().array().colwise() * beta.array();
  return m;
}

RateModel RateModel::heterogeneous(const Graph& g, Eigen::MatrixXd beta,
                                   Eigen::VectorXd delta) {
  const int n = g.node_count();
  if (beta.rows() != n || beta.cols() != n)
    throw std::invalid_argument("rate model: beta matrix must be n x n");
  if (delta.size() != n)
    throw std::invalid_argument("rate model: delta must have length n");
  check_delta(delta);
  const Eigen::MatrixXd a = g.adjacency();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (beta(i, j) < 0.0)
        throw std::invalid_argument("rate model: beta entries must be >= 0");
      if (beta(i, j) > 0.0 && a(i, j) == 0.0)
        throw std::invalid_argument(
            "rate model: beta(" + std::to_string(i) + ", " + std::to_string(j) +
            ") is nonzero but the graph has no edge " + std::to_string(j) +
            " -> " + std::to_string(i));
    }
  RateModel m;
  m.delta = std::move(delta);
  m.beta = std::move(beta);
  return m;
}

}  // namespace epinet
