#pragma once

#include <Eigen/Dense>
#include <vector>

#include "epinet/graph.hpp"
#include "epinet/rates.hpp"
#include "epinet/stochastic.hpp"

namespace epinet {

/// Exact forward Kolmogorov solution of the networked SIS chain over all 2^N
/// configurations (bit i of a configuration index = node i infected).
/// Brute-force oracle; refuses N > 12.
struct MasterSolution {
  std::vector<double> times;
  Eigen::MatrixXd distribution;  // times x 2^N, rows sum to 1
  Eigen::MatrixXd marginals;     // times x N, P(X_i = I)

  Eigen::VectorXd marginal_at(double t) const;  // nearest stored time
};

Eigen::VectorXd point_mass_distribution(int n, const std::vector<Compartment>& x0);

/// When sample_times is empty the distribution is recorded at every RK4 step;
/// otherwise exactly at the requested times (steps are shortened to land on
/// them).
MasterSolution exact_master_equation(const Graph& g, const RateModel& rates,
                                     const Eigen::VectorXd& x0_distribution,
                                     double horizon, double dt = 1e-3,
                                     const std::vector<double>& sample_times = {});

}  // namespace epinet
