#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "epinet/graph.hpp"
#include "epinet/posynomial.hpp"
#include "epinet/rates.hpp"

namespace epinet {

// ---------------------------------------------------------------------------
// Threshold check
// ---------------------------------------------------------------------------

struct ThresholdReport {
  bool stable_disease_free = false;
  double margin = 0.0;     // -lambda_max(B - D); >= 0 means stable
  double lambda_bd = 0.0;  // lambda_max(B - D)
  // Filled for homogeneous rate models: tau = beta/delta vs 1/lambda_max(A).
  std::optional<double> tau;
  std::optional<double> inv_lambda_a;
  std::optional<double> tau_margin;  // 1/lambda_max(A) - tau
  bool strongly_connected = false;
};

ThresholdReport check_threshold(const Graph& g, const RateModel& rates);

// ---------------------------------------------------------------------------
// Budget-constrained rate allocation
// ---------------------------------------------------------------------------

/// Minimize lambda_max(B - D) over node infection rates beta_i (lowered from
/// beta_hi at cost beta_cost_i (1/beta - 1/beta_hi)) and recovery rates
/// delta_i (raised from delta_lo at cost
/// delta_cost_i ((phi-delta)^-a - (phi-delta_lo)^-a)), subject to
/// total spend <= budget. Both cost curves are posynomial after folding their
/// additive constants into the budget, and both are zero at the no-spend
/// corner (beta_hi, delta_lo).
struct AllocationProblem {
  Graph graph;
  Eigen::VectorXd beta_lo, beta_hi;
  Eigen::VectorXd delta_lo, delta_hi;
  Eigen::VectorXd beta_cost;   // >= 0; 0 disables the knob's cost term
  Eigen::VectorXd delta_cost;  // >= 0
  double delta_exponent = 1.0;  // a > 0
  double budget = 0.0;

  int node_count() const { return static_cast<int>(beta_lo.size()); }
  double phi() const { return delta_hi.maxCoeff() + 1.0; }

  double beta_cost_of(int i, double beta) const;
  double delta_cost_of(int i, double delta) const;
  double spend(const Eigen::VectorXd& beta, const Eigen::VectorXd& delta) const;

  void validate() const;

  std::string to_json() const;
  static AllocationProblem from_json(const std::string& text);
};

/// The auxiliary geometric program: variables (lambda, beta_i, delta~_i, u_i)
/// with delta~ = phi - delta. Degenerate boxes pin their variable; one active
/// u is pinned to 1 since the eigen-constraints are scale-free in u.
struct GpBuild {
  GpProgram program;
  double phi = 0.0;
  double budget_rhs = 0.0;
  int lambda_var = 0;
  std::vector<int> beta_var, delta_var, u_var;  // -1 when pinned / inactive
};

GpBuild build_gp(const AllocationProblem& problem);

struct AllocationResult {
  Eigen::VectorXd beta, delta;
  Eigen::VectorXd u;        // eigen-surrogate vector, rescaled to sum = n
  double gp_lambda = 0.0;   // lambda* of the auxiliary program
  double phi = 0.0;
  double lambda_bd = 0.0;   // recomputed lambda_max(B* - D*)
  double spend = 0.0;
  double budget = 0.0;
  int outer_iterations = 0;
  int newton_iterations = 0;
  double kkt_residual = 0.0;
  double gap_surrogate = 0.0;

  std::string to_json() const;
};

AllocationResult solve_allocation(const AllocationProblem& problem,
                                  const GpOptions& opts = {});

/// Recomputes lambda_max(B* - D*) and verifies the decay-rate guarantee
/// lambda_max <= lambda* - phi (+1e-6); a violation means a solver bug and
/// throws.
double decay_rate(const AllocationResult& result, const AllocationProblem& problem);

// ---------------------------------------------------------------------------
// Brute-force oracle
// ---------------------------------------------------------------------------

struct BruteForceResult {
  Eigen::VectorXd beta, delta;
  double lambda_bd = 0.0;
  double spend = 0.0;
  long evaluated = 0;
};

/// Exhaustive per-node grid over the rate boxes, budget-filtered, with the
/// last free recovery rate filled to the largest affordable value (the
/// objective is monotone in it) and two refinement passes around the
/// incumbent. n <= 4, grid_density <= 50.
BruteForceResult brute_force_allocation(const AllocationProblem& problem,
                                        int grid_density);

/// Dominant eigenvalue of a small (n <= 4) Metzler matrix by closed forms
/// (characteristic polynomial) — independent of the power iteration.
double small_metzler_lambda(const Eigen::MatrixXd& m);

/// B - D for node-dependent infection rates on the problem's graph.
Eigen::MatrixXd stability_matrix_for(const AllocationProblem& problem,
                                     const Eigen::VectorXd& beta,
                                     const Eigen::VectorXd& delta);

}  // namespace epinet
