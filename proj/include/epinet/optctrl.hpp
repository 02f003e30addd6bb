#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "epinet/graph.hpp"
#include "epinet/ode.hpp"
#include "epinet/rates.hpp"

namespace epinet {

// ---------------------------------------------------------------------------
// Schedules
// ---------------------------------------------------------------------------

struct PiecewiseConstant {
  std::vector<double> switch_times;  // strictly increasing, inside (0, horizon)
  std::vector<double> values;        // one more than switch_times

  double value_at(double t) const;
};

struct PolicySchedule {
  std::vector<PiecewiseConstant> signals;
  double horizon = 0.0;
  Eigen::VectorXd lower, upper;  // per-signal bounds

  void validate() const;
  std::vector<double> breakpoints() const;  // sorted union over signals
  std::string to_csv() const;               // step function, one column per signal
  std::string to_json() const;

  static PolicySchedule constant(int signals, double value, double horizon,
                                 const Eigen::VectorXd& lower,
                                 const Eigen::VectorXd& upper);
};

struct CostateTrajectory {
  std::vector<double> times;
  Eigen::MatrixXd psi;        // times x costate components
  Eigen::MatrixXd switching;  // times x control signals
};

struct FbsOptions {
  double relaxation = 0.3;
  double control_tol = 1e-6;
  int max_sweeps = 5000;
  double dead_band = 1e-8;  // |switching| below this resolves to "no control"
};

// ---------------------------------------------------------------------------
// Population SIS treatment problem
// ---------------------------------------------------------------------------

/// dp = beta p (1-p) - ((1-u) delta1 + u delta2) p, u in [0, 1];
/// J = int c p + d u dt.
struct PopulationControlProblem {
  double beta = 0.0;
  double delta1 = 0.0, delta2 = 0.0;  // delta2 > delta1 > 0
  double infection_cost = 0.0;        // c
  double treatment_cost = 0.0;        // d
  double horizon = 0.0;
  double dt = 1e-3;

  void validate() const;
};

enum class PolicyClass { TreatThenStop, NeverTreat };

struct ClassifyResult {
  PolicyClass verdict = PolicyClass::NeverTreat;
  bool degenerate = false;  // exactly on the ratio boundary
  double spread_ratio = 0.0;  // beta / (delta2 - delta1)
  double cost_ratio = 0.0;    // c / d
};

/// Ratio test: treat-then-stop iff beta/(delta2-delta1) < c/d.
ClassifyResult classify_population_policy(const PopulationControlProblem& problem);

Trajectory simulate_controlled_population(const PopulationControlProblem& problem,
                                          const PolicySchedule& schedule, double p0);

double evaluate_objective_population(const PopulationControlProblem& problem,
                                     const PolicySchedule& schedule,
                                     const Trajectory& trajectory);

struct PopulationFbsResult {
  PolicySchedule schedule;  // snapped to bang-bang at the sign changes of f
  double objective = 0.0;       // of the snapped schedule
  double objective_raw = 0.0;   // of the converged grid control
  int switch_count = 0;
  int sweeps = 0;
  CostateTrajectory costate;
};

/// Forward-backward sweep for the population treatment problem. The costate
/// runs backward from psi(T) = 0 with
///   dpsi = c - psi (beta (1 - 2p) - ((1-u) delta1 + u delta2)),
/// the switching function is f = psi p (delta2 - delta1) + d, and the control
/// update u = 1 where f < 0, 0 where f > 0 is applied with relaxation.
PopulationFbsResult fbs_population_sis(const PopulationControlProblem& problem,
                                       double p0, const FbsOptions& opts = {});

// ---------------------------------------------------------------------------
// Networked SIR patching problem
// ---------------------------------------------------------------------------

/// Dynamics of rhs_sir_patching; per-node u_i in [0, u_max_i];
/// J = int sum_i (-ell_i R_i + c_i I_i + R_i h1_i u_i + R_i (S_i + I_i) h2_i u_i) dt.
struct SirNetworkControlProblem {
  Graph graph;
  RateModel rates;  // only the infection matrix enters the dynamics
  Eigen::VectorXd pi, u_max;
  Eigen::VectorXd ell, c, h1, h2;
  double horizon = 0.0;
  double dt = 1e-3;

  int node_count() const { return graph.node_count(); }
  void validate() const;
};

Trajectory simulate_sir_network(const SirNetworkControlProblem& problem,
                                const Eigen::VectorXd& x0,
                                const PolicySchedule& schedule);

double evaluate_objective_sir(const SirNetworkControlProblem& problem,
                              const PolicySchedule& schedule,
                              const Trajectory& trajectory);

struct NetworkFbsResult {
  PolicySchedule schedule;
  double objective = 0.0;
  double objective_raw = 0.0;
  bool snapped = false;          // one-switch snap passed its re-integration check
  double snap_rel_error = 0.0;
  Eigen::VectorXd tau;           // per-node switch-down times (snapped form)
  int sweeps = 0;
  CostateTrajectory costate;
};

/// FBS with three costates per node; the converged control is snapped to the
/// one-switch form u_i = u_max_i on [0, tau_i), 0 after, with tau_i matching
/// the control effort integral. The snap is validated by re-integration; on
/// failure the raw schedule is returned with snapped = false.
NetworkFbsResult fbs_sir_network(const SirNetworkControlProblem& problem,
                                 const Eigen::VectorXd& x0,
                                 const FbsOptions& opts = {});

// ---------------------------------------------------------------------------
// Networked SIS recovery-rate scheduling (open problem; heuristic only)
// ---------------------------------------------------------------------------

/// Heuristic FBS fixed point for scheduling recovery rates delta_i(t) in
/// [delta_lo, delta_hi] against J = int sum_i (c_i p_i + d_i delta_i) dt.
/// No optimality claim is made anywhere for this solver; the returned
/// schedule is a locally stationary point of the sweep.
struct SisNetworkControlProblem {
  Graph graph;
  Eigen::MatrixXd beta;  // beta(i, j) = rate at which j infects i
  Eigen::VectorXd c, d;
  double delta_lo = 0.0, delta_hi = 0.0;
  double horizon = 0.0;
  double dt = 1e-3;

  int node_count() const { return graph.node_count(); }
  void validate() const;
};

Trajectory simulate_sis_network_controlled(const SisNetworkControlProblem& problem,
                                           const Eigen::VectorXd& p0,
                                           const PolicySchedule& schedule);

double evaluate_objective_sis(const SisNetworkControlProblem& problem,
                              const PolicySchedule& schedule,
                              const Trajectory& trajectory);

NetworkFbsResult fbs_sis_network(const SisNetworkControlProblem& problem,
                                 const Eigen::VectorXd& p0,
                                 const FbsOptions& opts = {});

}  // namespace epinet
