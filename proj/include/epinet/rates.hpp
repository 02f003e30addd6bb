#pragma once

#include <Eigen/Dense>
#include <optional>

#include "epinet/graph.hpp"

namespace epinet {

/// Per-node recovery rates delta_i > 0 and per-edge infection rates
/// beta(i, j) >= 0, nonzero only where node i has an in-edge from j.
struct RateModel {
  Eigen::VectorXd delta;  // n
  Eigen::MatrixXd beta;   // n x n, beta(i, j) = rate at which j infects i

  // Set when constructed from scalar rates; lets threshold reports phrase the
  // verdict in terms of tau = beta / delta.
  std::optional<double> beta_scalar;
  std::optional<double> delta_scalar;

  // Meta-population bookkeeping: subpopulation sizes, not used by the
  // dynamics.
  std::optional<Eigen::VectorXd> population_sizes;

  int node_count() const { return static_cast<int>(delta.size()); }

  /// B - D, the Metzler matrix whose dominant eigenvalue decides stability.
  Eigen::MatrixXd stability_matrix() const {
    Eigen::MatrixXd m = beta;
    m.diagonal() -= delta;
    return m;
  }

  static RateModel homogeneous(const Graph& g, double beta, double delta);
  /// Node-dependent infection rates: beta(i, j) = beta_i * a(i, j).
  static RateModel node_rates(const Graph& g, const Eigen::VectorXd& beta,
                              const Eigen::VectorXd& delta);
  /// Fully heterogeneous; validates that the support of beta lies on the
  /// graph's edges.
  static RateModel heterogeneous(const Graph& g, Eigen::MatrixXd beta,
                                 Eigen::VectorXd delta);
};

}  // namespace epinet
