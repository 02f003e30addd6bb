#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace epinet {

/// Validation contract applied to every sample produced by the integrator.
/// All state entries are probabilities: values are clamped back into [0, 1]
/// when the overshoot is at most clamp_tol and rejected beyond that. Each
/// index group in unit_sum_groups must sum to 1 within sum_tol.
struct StateSpec {
  int dim = 0;
  std::vector<std::vector<int>> unit_sum_groups;
  double clamp_tol = 1e-12;
  double sum_tol = 1e-9;

  void enforce(Eigen::VectorXd& x, double t) const;
};

struct Trajectory {
  std::vector<double> times;
  Eigen::MatrixXd states;  // row k = state at times[k]
  std::vector<std::string> labels;
  std::string model;

  int samples() const { return static_cast<int>(times.size()); }
  const Eigen::VectorXd final_state() const { return states.row(states.rows() - 1); }

  /// CSV with header "t,<labels...>" and 12-significant-digit values.
  std::string to_csv() const;
};

using Rhs = std::function<void(double t, const Eigen::VectorXd& x, Eigen::VectorXd& dxdt)>;

/// A right-hand side bundled with its state contract and CSV labels.
struct OdeModel {
  Rhs rhs;
  StateSpec spec;
  std::vector<std::string> labels;
  std::string name;
};

/// Classic fixed-step RK4. Samples at every step; a short final step lands
/// exactly on the horizon. Throws std::runtime_error naming the offending
/// time when a sample violates the state contract.
Trajectory integrate(const OdeModel& model, const Eigen::VectorXd& x0,
                     double horizon, double dt);

/// Single RK4 step, exposed for the solvers that manage their own grids.
void rk4_step(const Rhs& rhs, double t, double h, Eigen::VectorXd& x);

}  // namespace epinet
