#include "epinet/meanfield.hpp"

#include <cmath>
#include <stdexcept>

#include "epinet/spectral.hpp"

namespace epinet {

double closed_form_population_sis(double beta, double delta, double p0, double t) {
  if (p0 < 0.0 || p0 > 1.0)
    throw std::invalid_argument("closed form: p0 must be in [0, 1]");
  if (beta <= 0.0 || delta <= 0.0)
    throw std::invalid_argument("closed form: beta and delta must be > 0");
  if (t < 0.0) throw std::invalid_argument("closed form: t must be >= 0");
  if (p0 == 0.0) return 0.0;
  if (std::abs(beta - delta) <= 1e-12) return 1.0 / (beta * t + 1.0 / p0);
  double e = std::exp((beta - delta) * t);
  return e / (beta * (e - 1.0) / (beta - delta) + 1.0 / p0);
}

double rhs_population_sis(double p, double beta, double delta) {
  return beta * p * (1.0 - p) - delta * p;
}

Eigen::Vector3d rhs_population_sir(const Eigen::Vector3d& sir, double beta,
                                   double delta) {
  double s = sir(0), i = sir(1);
  return {-beta * i * s, beta * i * s - delta * i, delta * i};
}

Feedback Feedback::constant(double k) {
  if (k < 0.0) throw std::invalid_argument("feedback: gain must be >= 0");
  return {Kind::Constant, k};
}
Feedback Feedback::linear_infected(double k) {
  if (k < 0.0) throw std::invalid_argument("feedback: gain must be >= 0");
  return {Kind::LinearInfected, k};
}
Feedback Feedback::saturating(double k) {
  if (k < 0.0) throw std::invalid_argument("feedback: gain must be >= 0");
  return {Kind::Saturating, k};
}

double Feedback::eval(double, double p_i, double) const {
  double v = 0.0;
  switch (kind) {
    case Kind::Zero: v = 0.0; break;
    case Kind::Constant: v = gain; break;
    case Kind::LinearInfected: v = gain * p_i; break;
    case Kind::Saturating: v = gain * p_i / (1.0 + p_i); break;
  }
  if (v < 0.0)
    throw std::runtime_error("feedback " + describe() + " returned a negative rate");
  return v;
}

std::string Feedback::describe() const {
  switch (kind) {
    case Kind::Zero: return "zero";
    case Kind::Constant: return "constant";
    case Kind::LinearInfected: return "linear_infected";
    case Kind::Saturating: return "saturating";
  }
  return "?";
}

Eigen::Vector3d rhs_population_spis(const Eigen::Vector3d& sip, double beta,
                                    double delta, const Feedback& f,
                                    const Feedback& g) {
  double s = sip(0), i = sip(1), p = sip(2);
  double fv = f.eval(s, i, p);
  double gv = g.eval(s, i, p);
  double infect = beta * i * s;
  return {-infect + delta * i - s * fv + p * gv,  //
          infect - delta * i,                     //
          s * fv - p * gv};
}

namespace {

std::vector<std::string> node_labels(const std::string& prefix, int n) {
  std::vector<std::string> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(prefix + "_" + std::to_string(i));
  return out;
}

std::vector<std::string> blocked_labels(std::initializer_list<std::string> prefixes,
                                        int n) {
  std::vector<std::string> out;
  for (const auto& p : prefixes) {
    auto part = node_labels(p, n);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

std::vector<std::vector<int>> per_node_groups(int compartments, int n) {
  std::vector<std::vector<int>> groups(n);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < compartments; ++c) groups[i].push_back(c * n + i);
  return groups;
}

}  // namespace

OdeModel make_population_sis(double beta, double delta) {
  OdeModel m;
  m.rhs = [beta, delta](double, const Eigen::VectorXd& x, Eigen::VectorXd& dx) {
    dx(0) = rhs_population_sis(x(0), beta, delta);
  };
  m.spec.dim = 1;
  m.labels = {"I"};
  m.name = "population_sis";
  return m;
}

OdeModel make_population_sir(double beta, double delta) {
  OdeModel m;
  m.rhs = [beta, delta](double, const Eigen::VectorXd& x, Eigen::VectorXd& dx) {
    dx = rhs_population_sir(x.head<3>(), beta, delta);
  };
  m.spec.dim = 3;
  m.spec.unit_sum_groups = {{0, 1, 2}};
  m.labels = {"S", "I", "R"};
  m.name = "population_sir";
  return m;
}

OdeModel make_population_spis(double beta, double delta, Feedback f, Feedback g) {
  OdeModel m;
  m.rhs = [beta, delta, f, g](double, const Eigen::VectorXd& x, Eigen::VectorXd& dx) {
    dx = rhs_population_spis(x.head<3>(), beta, delta, f, g);
  };
  m.spec.dim = 3;
  m.spec.unit_sum_groups = {{0, 1, 2}};
  m.labels = {"S", "I", "P"};
  m.name = "population_spis";
  return m;
}

Eigen::VectorXd rhs_network_sis(const Eigen::VectorXd& p, const RateModel& rates) {
  if (p.size() != rates.node_count())
    throw std::invalid_argument("network sis: state dimension mismatch");
  Eigen::VectorXd pressure = rates.beta * p;  // pressure_i = sum_j beta_ij p_j
  return -rates.delta.cwiseProduct(p) +
         pressure.cwiseProduct(Eigen::VectorXd::Ones(p.size()) - p);
}

OdeModel make_network_sis(const RateModel& rates) {
  OdeModel m;
  const int n = rates.node_count();
  m.rhs = [rates](double, const Eigen::VectorXd& x, Eigen::VectorXd& dx) {
    dx = rhs_network_sis(x, rates);
  };
  m.spec.dim = n;
  m.labels = node_labels("p", n);
  m.name = "network_sis";
  return m;
}

EndemicResult endemic_equilibrium(const RateModel& rates) {
  const int n = rates.node_count();
  EndemicResult result;
  if (lambda_max(rates.stability_matrix()).lambda_max <= 0.0) return result;

  const double damping = 0.5;
  const double tol = 1e-12;
  const int max_iters = 100000;
  Eigen::VectorXd p = Eigen::VectorXd::Constant(n, 0.5);
  for (int it = 1; it <= max_iters; ++it) {
    Eigen::VectorXd pressure = rates.beta * p;
    Eigen::VectorXd next =
        pressure.array() / (rates.delta.array() + pressure.array());
    next = (1.0 - damping) * p + damping * next;
    double change = (next - p).lpNorm<Eigen::Infinity>();
    p = next;
    if (change <= tol) {
      result.endemic = true;
      result.p = p;
      result.residual = rhs_network_sis(p, rates).lpNorm<Eigen::Infinity>();
      result.iterations = it;
      return result;
    }
  }
  throw std::runtime_error(
      "endemic_equilibrium: fixed-point iteration did not converge");
}

Eigen::VectorXd rhs_network_spis(const Eigen::VectorXd& sip, const Graph& g,
                                 const SpisRates& rates, const Feedback& f) {
  const int n = g.node_count();
  if (sip.size() != 3 * n)
    throw std::invalid_argument("network spis: state dimension mismatch");
  if (!(rates.beta0 < rates.beta))
    throw std::invalid_argument("network spis: beta0 must be < beta");
  const auto s = sip.segment(0, n);
  const auto i = sip.segment(n, n);
  const auto p = sip.segment(2 * n, n);
  Eigen::VectorXd pressure = g.adjacency() * i;  // sum_j a_ij I_j
  Eigen::VectorXd dx(3 * n);
  for (int v = 0; v < n; ++v) {
    double fv = f.eval(s(v), i(v), p(v));
    double infect_s = rates.beta * s(v) * pressure(v);
    double infect_p = rates.beta0 * p(v) * pressure(v);
    dx(v) = -infect_s + rates.delta * i(v) - s(v) * fv;
    dx(n + v) = infect_s + infect_p - rates.delta * i(v);
    dx(2 * n + v) = s(v) * fv - infect_p;
  }
  return dx;
}

OdeModel make_network_spis(const Graph& g, const SpisRates& rates, Feedback f) {
  const int n = g.node_count();
  OdeModel m;
  m.rhs = [g, rates, f](double, const Eigen::VectorXd& x, Eigen::VectorXd& dx) {
    dx = rhs_network_spis(x, g, rates, f);
  };
  m.spec.dim = 3 * n;
  m.spec.unit_sum_groups = per_node_groups(3, n);
  m.labels = blocked_labels({"S", "I", "P"}, n);
  m.name = "network_spis";
  return m;
}

Eigen::VectorXd rhs_bivirus(const Eigen::VectorXd& state, const Graph& g1,
                            const Graph& g2, const BivirusRates& rates) {
  const int n = g1.node_count();
  if (g2.node_count() != n)
    throw std::invalid_argument("bivirus: graphs must share the node set");
  if (state.size() != 3 * n)
    throw std::invalid_argument("bivirus: state dimension mismatch");
  if (rates.beta1.size() != n || rates.beta2.size() != n ||
      rates.delta1.size() != n || rates.delta2.size() != n)
    throw std::invalid_argument("bivirus: rate vectors must have length n");
  const auto s = state.segment(0, n);
  const auto i1 = state.segment(n, n);
  const auto i2 = state.segment(2 * n, n);
  Eigen::VectorXd press1 = g1.adjacency() * i1;
  Eigen::VectorXd press2 = g2.adjacency() * i2;
  Eigen::VectorXd dx(3 * n);
  for (int v = 0; v < n; ++v) {
    double in1 = rates.beta1(v) * s(v) * press1(v);
    double in2 = rates.beta2(v) * s(v) * press2(v);
    double out1 = rates.delta1(v) * i1(v);
    double out2 = rates.delta2(v) * i2(v);
    dx(v) = -in1 - in2 + out1 + out2;
    dx(n + v) = in1 - out1;
    dx(2 * n + v) = in2 - out2;
  }
  return dx;
}

OdeModel make_bivirus(const Graph& g1, const Graph& g2, const BivirusRates& rates) {
  const int n = g1.node_count();
  OdeModel m;
  m.rhs = [g1, g2, rates](double, const Eigen::VectorXd& x, Eigen::VectorXd& dx) {
    dx = rhs_bivirus(x, g1, g2, rates);
  };
  m.spec.dim = 3 * n;
  m.spec.unit_sum_groups = per_node_groups(3, n);
  m.labels = blocked_labels({"S", "I1", "I2"}, n);
  m.name = "bivirus";
  return m;
}

Eigen::VectorXd rhs_sir_patching(const Eigen::VectorXd& sir, const RateModel& rates,
                                 const Eigen::VectorXd& pi, const Eigen::VectorXd& u,
                                 const Eigen::VectorXd& u_max) {
  const int n = rates.node_count();
  if (sir.size() != 3 * n)
    throw std::invalid_argument("sir patching: state dimension mismatch");
  if (pi.size() != n || u.size() != n || u_max.size() != n)
    throw std::invalid_argument("sir patching: pi and u must have length n");
  if ((pi.array() < 0.0).any() || (pi.array() > 1.0).any())
    throw std::invalid_argument("sir patching: pi must be in [0, 1]");
  for (int v = 0; v < n; ++v)
    if (u(v) < 0.0 || u(v) > u_max(v))
      throw std::invalid_argument("sir patching: control u_" + std::to_string(v) +
                                  " outside [0, u_max]");
  const auto s = sir.segment(0, n);
  const auto i = sir.segment(n, n);
  const auto r = sir.segment(2 * n, n);
  Eigen::VectorXd pressure = rates.beta * i;
  Eigen::VectorXd dx(3 * n);
  for (int v = 0; v < n; ++v) {
    double infect = s(v) * pressure(v);
    double patch_s = s(v) * r(v) * u(v);
    double patch_i = pi(v) * i(v) * r(v) * u(v);
    dx(v) = -infect - patch_s;
    dx(n + v) = infect - patch_i;
    dx(2 * n + v) = patch_s + patch_i;
  }
  return dx;
}

OdeModel make_sir_patching(const RateModel& rates, const Eigen::VectorXd& pi,
                           const Eigen::VectorXd& u, const Eigen::VectorXd& u_max) {
  const int n = rates.node_count();
  OdeModel m;
  m.rhs = [rates, pi, u, u_max](double, const Eigen::VectorXd& x, Eigen::VectorXd& dx) {
    dx = rhs_sir_patching(x, rates, pi, u, u_max);
  };
  m.spec.dim = 3 * n;
  m.spec.unit_sum_groups = per_node_groups(3, n);
  m.labels = blocked_labels({"S", "I", "R"}, n);
  m.name = "network_sir_patching";
  return m;
}

}  // namespace epinet
