#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "epinet/graph.hpp"
#include "epinet/ode.hpp"
#include "epinet/rates.hpp"

namespace epinet {

// ---------------------------------------------------------------------------
// Population models (well-mixed fractions)
// ---------------------------------------------------------------------------

/// Analytic solution of dp/dt = beta p (1 - p) - delta p. Switches to the
/// beta == delta branch when |beta - delta| <= 1e-12 to avoid cancellation;
/// p0 == 0 stays at 0.
double closed_form_population_sis(double beta, double delta, double p0, double t);

/// dp/dt for the scalar SIS fraction.
double rhs_population_sis(double p_infected, double beta, double delta);

/// (dS, dI, dR) for the SIR fractions; dR = delta * I, so the three
/// components sum to zero.
Eigen::Vector3d rhs_population_sir(const Eigen::Vector3d& sir, double beta,
                                   double delta);

/// Named protection feedback, kept declarative so scenario files can select
/// one. Evaluated per node on that node's (pS, pI, pP).
struct Feedback {
  enum class Kind { Zero, Constant, LinearInfected, Saturating };
  Kind kind = Kind::Zero;
  double gain = 0.0;

  static Feedback zero() { return {Kind::Zero, 0.0}; }
  static Feedback constant(double k);
  static Feedback linear_infected(double k);
  static Feedback saturating(double k);

  double eval(double p_s, double p_i, double p_p) const;
  std::string describe() const;
};

/// (dS, dI, dP) for the three-state protected population model:
///   dS = -beta I S + delta I - S f(.) + P g(.)
///   dI =  beta I S - delta I
///   dP =  S f(.) - P g(.)
Eigen::Vector3d rhs_population_spis(const Eigen::Vector3d& sip, double beta,
                                    double delta, const Feedback& f,
                                    const Feedback& g);

OdeModel make_population_sis(double beta, double delta);
OdeModel make_population_sir(double beta, double delta);
OdeModel make_population_spis(double beta, double delta, Feedback f, Feedback g);

// ---------------------------------------------------------------------------
// Network models (per-node probabilities)
// ---------------------------------------------------------------------------

/// dp_i = -delta_i p_i + sum_j beta(i,j) p_j (1 - p_i).
Eigen::VectorXd rhs_network_sis(const Eigen::VectorXd& p, const RateModel& rates);

OdeModel make_network_sis(const RateModel& rates);

struct EndemicResult {
  bool endemic = false;      // false = disease-free verdict
  Eigen::VectorXd p;         // nonempty iff endemic
  double residual = 0.0;     // inf-norm of the SIS right-hand side at p
  int iterations = 0;
};

/// Damped fixed-point iteration p_i <- (sum_j beta_ij p_j) / (delta_i +
/// sum_j beta_ij p_j), damping 0.5, started from p = 0.5. Returns the
/// disease-free verdict when lambda_max(B - D) <= 0.
EndemicResult endemic_equilibrium(const RateModel& rates);

/// Homogeneous three-state network model with a protected compartment; the
/// protected infection rate beta0 must be < beta. State layout is blocked:
/// [S_0..S_{n-1}, I_0.., P_0..].
struct SpisRates {
  double beta = 0.0;
  double beta0 = 0.0;
  double delta = 0.0;
};

Eigen::VectorXd rhs_network_spis(const Eigen::VectorXd& sip, const Graph& g,
                                 const SpisRates& rates, const Feedback& f);

OdeModel make_network_spis(const Graph& g, const SpisRates& rates, Feedback f);

/// Two exclusive infections with node-dependent rates, each spreading over
/// its own graph. State layout: [S, I1, I2] blocks.
struct BivirusRates {
  Eigen::VectorXd beta1, delta1;
  Eigen::VectorXd beta2, delta2;
};

Eigen::VectorXd rhs_bivirus(const Eigen::VectorXd& state, const Graph& g1,
                            const Graph& g2, const BivirusRates& rates);

OdeModel make_bivirus(const Graph& g1, const Graph& g2, const BivirusRates& rates);

/// Networked SIR with patching control: removed nodes push the patch to
/// their neighbors at rate u_i. pi_i in [0, 1] scales how effectively
/// infected nodes accept the patch. State layout: [S, I, R] blocks.
Eigen::VectorXd rhs_sir_patching(const Eigen::VectorXd& sir, const RateModel& rates,
                                 const Eigen::VectorXd& pi, const Eigen::VectorXd& u,
                                 const Eigen::VectorXd& u_max);

OdeModel make_sir_patching(const RateModel& rates, const Eigen::VectorXd& pi,
                           const Eigen::VectorXd& u, const Eigen::VectorXd& u_max);

}  // namespace epinet
