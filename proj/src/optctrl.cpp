#include "epinet/optctrl.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "epinet/meanfield.hpp"
#include "json.hpp"

namespace epinet {

// ---------------------------------------------------------------------------
// Schedules
// ---------------------------------------------------------------------------

double PiecewiseConstant::value_at(double t) const {
  auto it = std::upper_bound(switch_times.begin(), switch_times.end(), t);
  return values[static_cast<std::size_t>(it - switch_times.begin())];
}

void PolicySchedule::validate() const {
  const int m = static_cast<int>(signals.size());
  if (lower.size() != m || upper.size() != m)
    throw std::invalid_argument("schedule: bounds must match the signal count");
  for (int j = 0; j < m; ++j) {
    const auto& s = signals[j];
    if (s.values.size() != s.switch_times.size() + 1)
      throw std::invalid_argument("schedule: values must outnumber switches by one");
    for (std::size_t k = 0; k < s.switch_times.size(); ++k) {
      double t = s.switch_times[k];
      if (!(t > 0.0) || !(t < horizon))
        throw std::invalid_argument("schedule: breakpoint outside (0, horizon)");
      if (k > 0 && !(t > s.switch_times[k - 1]))
        throw std::invalid_argument("schedule: breakpoints must strictly increase");
    }
    for (double v : s.values)
      if (v < lower(j) - 1e-12 || v > upper(j) + 1e-12)
        throw std::invalid_argument("schedule: value outside [lower, upper]");
  }
}

std::vector<double> PolicySchedule::breakpoints() const {
  std::vector<double> all;
  for (const auto& s : signals)
    all.insert(all.end(), s.switch_times.begin(), s.switch_times.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end(),
                        [](double a, double b) { return std::abs(a - b) <= 1e-12; }),
            all.end());
  return all;
}

PolicySchedule PolicySchedule::constant(int signals, double value, double horizon,
                                        const Eigen::VectorXd& lower,
                                        const Eigen::VectorXd& upper) {
  PolicySchedule s;
  s.horizon = horizon;
  s.lower = lower;
  s.upper = upper;
  s.signals.assign(signals, PiecewiseConstant{{}, {value}});
  s.validate();
  return s;
}

std::string PolicySchedule::to_csv() const {
  std::vector<double> rows = breakpoints();
  rows.insert(rows.begin(), 0.0);
  rows.push_back(horizon);
  std::ostringstream out;
  out << "t";
  for (std::size_t j = 0; j < signals.size(); ++j) out << ",u_" << j;
  out << "\n";
  char buf[40];
  for (double t : rows) {
    std::snprintf(buf, sizeof(buf), "%.12g", t);
    out << buf;
    double query = std::min(t, horizon * (1.0 - 1e-15));
    for (const auto& s : signals) {
      std::snprintf(buf, sizeof(buf), "%.12g", s.value_at(query));
      out << "," << buf;
    }
    out << "\n";
  }
  return out.str();
}

std::string PolicySchedule::to_json() const {
  nlohmann::json j;
  j["horizon"] = horizon;
  j["signals"] = nlohmann::json::array();
  for (std::size_t k = 0; k < signals.size(); ++k) {
    nlohmann::json s;
    s["switch_times"] = signals[k].switch_times;
    s["values"] = signals[k].values;
    s["lower"] = lower(k);
    s["upper"] = upper(k);
    j["signals"].push_back(s);
  }
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Shared grid machinery
// ---------------------------------------------------------------------------

namespace {

std::vector<double> aligned_grid(double horizon, double dt,
                                 std::vector<double> breakpoints) {
  breakpoints.push_back(horizon);
  std::sort(breakpoints.begin(), breakpoints.end());
  std::vector<double> times{0.0};
  double prev = 0.0;
  for (double b : breakpoints) {
    if (b <= prev + 1e-12 || b > horizon + 1e-12) continue;
    long steps = std::max(1L, std::lround(std::ceil((b - prev) / dt - 1e-9)));
    double h = (b - prev) / steps;
    for (long k = 1; k <= steps; ++k)
      times.push_back(k == steps ? b : prev + k * h);
    prev = b;
  }
  return times;
}

void check_alignment(const std::vector<double>& times, const PolicySchedule& schedule) {
  for (double b : schedule.breakpoints()) {
    auto it = std::lower_bound(times.begin(), times.end(), b - 1e-9);
    if (it == times.end() || std::abs(*it - b) > 1e-9)
      throw std::invalid_argument(
          "objective: schedule breakpoint not aligned with the trajectory grid");
  }
}

Trajectory simulate_on_grid(const Rhs& rhs_with_u,
                            const std::function<void(double)>& set_controls,
                            const PolicySchedule& schedule,
                            const Eigen::VectorXd& x0, const StateSpec& spec,
                            std::vector<std::string> labels, std::string name,
                            double horizon, double dt) {
  schedule.validate();
  std::vector<double> times = aligned_grid(horizon, dt, schedule.breakpoints());
  Trajectory traj;
  traj.times = times;
  traj.labels = std::move(labels);
  traj.model = std::move(name);
  traj.states.resize(times.size(), x0.size());
  Eigen::VectorXd x = x0;
  spec.enforce(x, 0.0);
  traj.states.row(0) = x;
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    double h = times[k + 1] - times[k];
    set_controls(0.5 * (times[k] + times[k + 1]));
    rk4_step(rhs_with_u, times[k], h, x);
    spec.enforce(x, times[k + 1]);
    traj.states.row(k + 1) = x;
  }
  return traj;
}

}  // namespace


namespace {

// The pure relaxed sweep oscillates at grid cells sitting on the switching
// surface (the target flips every sweep there). Once a sweep stops improving,
// the relaxation factor is halved: stable cells have converged geometrically
// by then, and the surface cells freeze and are resolved by the snap.
struct AdaptiveRelaxation {
  double omega;
  double best = std::numeric_limits<double>::infinity();
  int stall = 0;

  void observe(double change) {
    if (change < 0.95 * best) {
      best = change;
      stall = 0;
    } else if (++stall >= 20) {
      omega = std::max(0.5 * omega, 1e-9);
      stall = 0;
    }
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// Population treatment problem
// ---------------------------------------------------------------------------

void PopulationControlProblem::validate() const {
  if (!(delta1 > 0.0) || !(delta2 > delta1))
    throw std::invalid_argument("population control: need delta2 > delta1 > 0");
  if (beta < 0.0) throw std::invalid_argument("population control: beta must be >= 0");
  if (!(infection_cost > 0.0) || !(treatment_cost > 0.0))
    throw std::invalid_argument("population control: costs must be > 0");
  if (!(horizon > 0.0)) throw std::invalid_argument("population control: horizon > 0");
  if (!(dt > 0.0)) throw std::invalid_argument("population control: dt > 0");
}

ClassifyResult classify_population_policy(const PopulationControlProblem& problem) {
  problem.validate();
  ClassifyResult r;
  r.spread_ratio = problem.beta / (problem.delta2 - problem.delta1);
  r.cost_ratio = problem.infection_cost / problem.treatment_cost;
  if (r.spread_ratio < r.cost_ratio) {
    r.verdict = PolicyClass::TreatThenStop;
  } else {
    r.verdict = PolicyClass::NeverTreat;
    r.degenerate = (r.spread_ratio == r.cost_ratio);
  }
  return r;
}

namespace {

double population_drhs(double p, double u, const PopulationControlProblem& pb) {
  double recovery = (1.0 - u) * pb.delta1 + u * pb.delta2;
  return pb.beta * p * (1.0 - p) - recovery * p;
}

}  // namespace

Trajectory simulate_controlled_population(const PopulationControlProblem& problem,
                                          const PolicySchedule& schedule, double p0) {
  problem.validate();
  if (schedule.signals.size() != 1)
    throw std::invalid_argument("population control: one control signal expected");
  if (p0 < 0.0 || p0 > 1.0)
    throw std::invalid_argument("population control: p0 must be in [0, 1]");
  double u = 0.0;
  Rhs rhs = [&u, &problem](double, const Eigen::VectorXd& x, Eigen::VectorXd& dx) {
    dx(0) = population_drhs(x(0), u, problem);
  };
  StateSpec spec;
  spec.dim = 1;
  return simulate_on_grid(
      rhs, [&](double t) { u = schedule.signals[0].value_at(t); }, schedule,
      Eigen::VectorXd::Constant(1, p0), spec, {"I"}, "population_sis_controlled",
      problem.horizon, problem.dt);
}

double evaluate_objective_population(const PopulationControlProblem& problem,
                                     const PolicySchedule& schedule,
                                     const Trajectory& trajectory) {
  check_alignment(trajectory.times, schedule);
  double j = 0.0;
  for (std::size_t k = 0; k + 1 < trajectory.times.size(); ++k) {
    double h = trajectory.times[k + 1] - trajectory.times[k];
    double u = schedule.signals[0].value_at(0.5 * (trajectory.times[k] +
                                                   trajectory.times[k + 1]));
    double pmid = 0.5 * (trajectory.states(k, 0) + trajectory.states(k + 1, 0));
    j += h * (problem.infection_cost * pmid + problem.treatment_cost * u);
  }
  return j;
}

PopulationFbsResult fbs_population_sis(const PopulationControlProblem& problem,
                                       double p0, const FbsOptions& opts) {
  problem.validate();
  if (!(p0 > 0.0) || p0 > 1.0)
    throw std::invalid_argument("fbs population: p0 must be in (0, 1]");
  const long m = std::max(1L, std::lround(std::ceil(problem.horizon / problem.dt - 1e-9)));
  const double h = problem.horizon / m;

  Eigen::VectorXd u = Eigen::VectorXd::Zero(m + 1);
  Eigen::VectorXd p(m + 1), psi(m + 1), f(m + 1);
  int sweeps = 0;
  bool converged = false;
  AdaptiveRelaxation relax{opts.relaxation};
  while (sweeps < opts.max_sweeps) {
    ++sweeps;
    // forward state
    p(0) = p0;
    for (long k = 0; k < m; ++k) {
      Eigen::VectorXd x = Eigen::VectorXd::Constant(1, p(k));
      double uk = u(k);
      Rhs rhs = [&](double, const Eigen::VectorXd& s, Eigen::VectorXd& dx) {
        dx(0) = population_drhs(s(0), uk, problem);
      };
      rk4_step(rhs, k * h, h, x);
      p(k + 1) = x(0);
    }
    // backward state+costate from (p(T), 0)
    psi(m) = 0.0;
    Eigen::VectorXd y(2);
    y << p(m), 0.0;
    for (long k = m; k > 0; --k) {
      double uk = u(k - 1);
      Rhs rhs = [&](double, const Eigen::VectorXd& s, Eigen::VectorXd& dy) {
        double recovery = (1.0 - uk) * problem.delta1 + uk * problem.delta2;
        dy(0) = population_drhs(s(0), uk, problem);
        dy(1) = problem.infection_cost -
                s(1) * (problem.beta * (1.0 - 2.0 * s(0)) - recovery);
      };
      rk4_step(rhs, k * h, -h, y);
      psi(k - 1) = y(1);
    }
    // switching function on the forward state
    for (long k = 0; k <= m; ++k)
      f(k) = psi(k) * p(k) * (problem.delta2 - problem.delta1) +
             problem.treatment_cost;
    double change = 0.0;
    for (long k = 0; k <= m; ++k) {
      double target = (f(k) < -opts.dead_band) ? 1.0 : 0.0;
      double next = u(k) + relax.omega * (target - u(k));
      change = std::max(change, std::abs(next - u(k)));
      u(k) = next;
    }
    if (change <= opts.control_tol) {
      converged = true;
      break;
    }
    relax.observe(change);
  }
  if (!converged)
    throw std::runtime_error("fbs_population_sis: sweep did not converge within " +
                             std::to_string(opts.max_sweeps) + " iterations");

  // snap to bang-bang at the sign changes of f
  PopulationFbsResult result;
  PiecewiseConstant signal;
  auto treat = [&](long k) { return f(k) < -opts.dead_band; };
  signal.values.push_back(treat(0) ? 1.0 : 0.0);
  for (long k = 0; k + 1 <= m; ++k) {
    if (treat(k) == treat(k + 1)) continue;
    double fk = f(k), fk1 = f(k + 1);
    double frac = (std::abs(fk1 - fk) > 1e-300) ? fk / (fk - fk1) : 0.5;
    frac = std::min(1.0, std::max(0.0, frac));
    signal.switch_times.push_back((k + frac) * h);
    signal.values.push_back(treat(k + 1) ? 1.0 : 0.0);
  }
  result.schedule.signals = {signal};
  result.schedule.horizon = problem.horizon;
  result.schedule.lower = Eigen::VectorXd::Zero(1);
  result.schedule.upper = Eigen::VectorXd::Ones(1);
  result.schedule.validate();
  result.switch_count = static_cast<int>(signal.switch_times.size());
  result.sweeps = sweeps;

  // raw objective on the converged grid control
  double raw = 0.0;
  for (long k = 0; k < m; ++k)
    raw += h * (problem.infection_cost * 0.5 * (p(k) + p(k + 1)) +
                problem.treatment_cost * u(k));
  result.objective_raw = raw;

  Trajectory snapped = simulate_controlled_population(problem, result.schedule, p0);
  result.objective = evaluate_objective_population(problem, result.schedule, snapped);

  result.costate.times.resize(m + 1);
  for (long k = 0; k <= m; ++k) result.costate.times[k] = k * h;
  result.costate.psi = psi;
  result.costate.switching = f;
  return result;
}

// ---------------------------------------------------------------------------
// SIR network patching
// ---------------------------------------------------------------------------

void SirNetworkControlProblem::validate() const {
  const int n = graph.node_count();
  if (n < 1) throw std::invalid_argument("sir control: empty graph");
  if (rates.node_count() != n)
    throw std::invalid_argument("sir control: rate model mismatch");
  auto len = [n](const Eigen::VectorXd& v, const char* what) {
    if (v.size() != n)
      throw std::invalid_argument(std::string("sir control: ") + what +
                                  " must have length n");
  };
  len(pi, "pi");
  len(u_max, "u_max");
  len(ell, "ell");
  len(c, "c");
  len(h1, "h1");
  len(h2, "h2");
  if ((u_max.array() <= 0.0).any())
    throw std::invalid_argument("sir control: u_max must be > 0");
  if ((pi.array() < 0.0).any() || (pi.array() > 1.0).any())
    throw std::invalid_argument("sir control: pi must be in [0, 1]");
  if ((ell.array() < 0.0).any() || (c.array() < 0.0).any() ||
      (h1.array() < 0.0).any() || (h2.array() < 0.0).any())
    throw std::invalid_argument("sir control: cost weights must be >= 0");
  if (!(horizon > 0.0) || !(dt > 0.0))
    throw std::invalid_argument("sir control: horizon and dt must be > 0");
}

namespace {

StateSpec sir_spec(int n) {
  StateSpec spec;
  spec.dim = 3 * n;
  spec.unit_sum_groups.resize(n);
  for (int i = 0; i < n; ++i)
    spec.unit_sum_groups[i] = {i, n + i, 2 * n + i};
  return spec;
}

std::vector<std::string> sir_labels(int n) {
  std::vector<std::string> labels;
  for (int i = 0; i < n; ++i) labels.push_back("S_" + std::to_string(i));
  for (int i = 0; i < n; ++i) labels.push_back("I_" + std::to_string(i));
  for (int i = 0; i < n; ++i) labels.push_back("R_" + std::to_string(i));
  return labels;
}

double sir_running_cost(const SirNetworkControlProblem& pb, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& u) {
  const int n = pb.node_count();
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    double s = x(i), inf = x(n + i), r = x(2 * n + i);
    total += -pb.ell(i) * r + pb.c(i) * inf + r * pb.h1(i) * u(i) +
             r * (s + inf) * pb.h2(i) * u(i);
  }
  return total;
}

}  // namespace

Trajectory simulate_sir_network(const SirNetworkControlProblem& problem,
                                const Eigen::VectorXd& x0,
                                const PolicySchedule& schedule) {
  problem.validate();
  const int n = problem.node_count();
  if (static_cast<int>(schedule.signals.size()) != n)
    throw std::invalid_argument("sir control: one signal per node expected");
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  Rhs rhs = [&](double, const Eigen::VectorXd& x, Eigen::VectorXd& dx) {
    dx = rhs_sir_patching(x, problem.rates, problem.pi, u, problem.u_max);
  };
  auto set_controls = [&](double t) {
    for (int i = 0; i < n; ++i) u(i) = schedule.signals[i].value_at(t);
  };
  return simulate_on_grid(rhs, set_controls, schedule, x0, sir_spec(n),
                          sir_labels(n), "network_sir_patching", problem.horizon,
                          problem.dt);
}

double evaluate_objective_sir(const SirNetworkControlProblem& problem,
                              const PolicySchedule& schedule,
                              const Trajectory& trajectory) {
  check_alignment(trajectory.times, schedule);
  const int n = problem.node_count();
  Eigen::VectorXd u(n);
  double j = 0.0;
  for (std::size_t k = 0; k + 1 < trajectory.times.size(); ++k) {
    double h = trajectory.times[k + 1] - trajectory.times[k];
    double mid = 0.5 * (trajectory.times[k] + trajectory.times[k + 1]);
    for (int i = 0; i < n; ++i) u(i) = schedule.signals[i].value_at(mid);
    double a = sir_running_cost(problem, trajectory.states.row(k), u);
    double b = sir_running_cost(problem, trajectory.states.row(k + 1), u);
    j += 0.5 * h * (a + b);
  }
  return j;
}

NetworkFbsResult fbs_sir_network(const SirNetworkControlProblem& problem,
                                 const Eigen::VectorXd& x0, const FbsOptions& opts) {
  problem.validate();
  const int n = problem.node_count();
  if (x0.size() != 3 * n)
    throw std::invalid_argument("fbs sir: initial state must have 3n entries");
  const long m = std::max(1L, std::lround(std::ceil(problem.horizon / problem.dt - 1e-9)));
  const double h = problem.horizon / m;
  const Eigen::MatrixXd& beta = problem.rates.beta;

  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(m + 1, n);
  Eigen::MatrixXd states(m + 1, 3 * n);
  Eigen::MatrixXd costates(m + 1, 3 * n);
  Eigen::MatrixXd sigma(m + 1, n);
  Eigen::VectorXd uk(n);

  auto costate_rhs = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& q,
                         const Eigen::VectorXd& ctrl, Eigen::VectorXd& dq) {
    auto s = x.segment(0, n);
    auto inf = x.segment(n, n);
    auto r = x.segment(2 * n, n);
    auto a = q.segment(0, n);
    auto b = q.segment(n, n);
    auto rr = q.segment(2 * n, n);
    Eigen::VectorXd phi = beta * inf;
    Eigen::VectorXd w = s.cwiseProduct(b - a);
    Eigen::VectorXd cross = beta.transpose() * w;  // sum_j beta(j,i) S_j (b_j - a_j)
    for (int i = 0; i < n; ++i) {
      double ru = r(i) * ctrl(i);
      dq(i) = -problem.h2(i) * ru + a(i) * (phi(i) + ru) - b(i) * phi(i) -
              rr(i) * ru;
      dq(n + i) = -problem.c(i) - problem.h2(i) * ru - cross(i) +
                  (b(i) - rr(i)) * problem.pi(i) * ru;
      dq(2 * n + i) = problem.ell(i) - problem.h1(i) * ctrl(i) -
                      problem.h2(i) * (s(i) + inf(i)) * ctrl(i) +
                      a(i) * s(i) * ctrl(i) + b(i) * problem.pi(i) * inf(i) * ctrl(i) -
                      rr(i) * (s(i) + problem.pi(i) * inf(i)) * ctrl(i);
    }
  };

  int sweeps = 0;
  bool converged = false;
  AdaptiveRelaxation relax{opts.relaxation};
  while (sweeps < opts.max_sweeps) {
    ++sweeps;
    // forward
    states.row(0) = x0;
    for (long k = 0; k < m; ++k) {
      Eigen::VectorXd x = states.row(k);
      uk = u.row(k);
      Rhs rhs = [&](double, const Eigen::VectorXd& s, Eigen::VectorXd& dx) {
        dx = rhs_sir_patching(s, problem.rates, problem.pi, uk, problem.u_max);
      };
      rk4_step(rhs, k * h, h, x);
      states.row(k + 1) = x;
    }
    // backward, state and costate together
    Eigen::VectorXd y(6 * n);
    y.head(3 * n) = states.row(m);
    y.tail(3 * n).setZero();
    costates.row(m).setZero();
    for (long k = m; k > 0; --k) {
      uk = u.row(k - 1);
      Rhs rhs = [&](double, const Eigen::VectorXd& s, Eigen::VectorXd& dy) {
        Eigen::VectorXd dq(3 * n);
        costate_rhs(s.head(3 * n), s.tail(3 * n), uk, dq);
        dy.head(3 * n) =
            rhs_sir_patching(s.head(3 * n), problem.rates, problem.pi, uk,
                             problem.u_max);
        dy.tail(3 * n) = dq;
      };
      rk4_step(rhs, k * h, -h, y);
      costates.row(k - 1) = y.tail(3 * n);
    }
    // switching functions on the forward state
    for (long k = 0; k <= m; ++k) {
      for (int i = 0; i < n; ++i) {
        double s = states(k, i), inf = states(k, n + i), r = states(k, 2 * n + i);
        double a = costates(k, i), b = costates(k, n + i), rr = costates(k, 2 * n + i);
        sigma(k, i) =
            r * (problem.h1(i) + (s + inf) * problem.h2(i) - a * s -
                 b * problem.pi(i) * inf + rr * (s + problem.pi(i) * inf));
      }
    }
    double change = 0.0;
    for (long k = 0; k <= m; ++k)
      for (int i = 0; i < n; ++i) {
        double target = (sigma(k, i) < -opts.dead_band) ? problem.u_max(i) : 0.0;
        double next = u(k, i) + relax.omega * (target - u(k, i));
        change = std::max(change, std::abs(next - u(k, i)));
        u(k, i) = next;
      }
    if (change <= opts.control_tol) {
      converged = true;
      break;
    }
    relax.observe(change);
  }
  if (!converged)
    throw std::runtime_error("fbs_sir_network: sweep did not converge within " +
                             std::to_string(opts.max_sweeps) + " iterations");

  NetworkFbsResult result;
  result.sweeps = sweeps;

  // raw objective
  double raw = 0.0;
  for (long k = 0; k < m; ++k) {
    uk = u.row(k);
    raw += 0.5 * h * (sir_running_cost(problem, states.row(k), uk) +
                      sir_running_cost(problem, states.row(k + 1), uk));
  }
  result.objective_raw = raw;

  // snap to the one-switch form, tau_i matching the control effort
  result.tau.resize(n);
  PolicySchedule snapped;
  snapped.horizon = problem.horizon;
  snapped.lower = Eigen::VectorXd::Zero(n);
  snapped.upper = problem.u_max;
  for (int i = 0; i < n; ++i) {
    double effort = 0.0;
    for (long k = 0; k < m; ++k) effort += h * u(k, i);
    double tau = std::min(problem.horizon, std::max(0.0, effort / problem.u_max(i)));
    result.tau(i) = tau;
    PiecewiseConstant sig;
    if (tau <= 1e-12) {
      sig.values = {0.0};
    } else if (tau >= problem.horizon - 1e-12) {
      sig.values = {problem.u_max(i)};
    } else {
      sig.switch_times = {tau};
      sig.values = {problem.u_max(i), 0.0};
    }
    snapped.signals.push_back(sig);
  }
  snapped.validate();

  Trajectory straj = simulate_sir_network(problem, x0, snapped);
  double j_snap = evaluate_objective_sir(problem, snapped, straj);
  double scale = std::max({std::abs(raw), std::abs(j_snap), 1e-12});
  result.snap_rel_error = std::abs(j_snap - raw) / scale;
  if (result.snap_rel_error <= 1e-4) {
    result.snapped = true;
    result.schedule = snapped;
    result.objective = j_snap;
  } else {
    // keep the raw grid control, merged into constant runs
    result.snapped = false;
    PolicySchedule rawsched;
    rawsched.horizon = problem.horizon;
    rawsched.lower = Eigen::VectorXd::Zero(n);
    rawsched.upper = problem.u_max;
    for (int i = 0; i < n; ++i) {
      PiecewiseConstant sig;
      sig.values.push_back(u(0, i));
      for (long k = 1; k < m; ++k)
        if (std::abs(u(k, i) - sig.values.back()) > 1e-12) {
          sig.switch_times.push_back(k * h);
          sig.values.push_back(u(k, i));
        }
      rawsched.signals.push_back(sig);
    }
    rawsched.validate();
    result.schedule = rawsched;
    result.objective = raw;
  }

  result.costate.times.resize(m + 1);
  for (long k = 0; k <= m; ++k) result.costate.times[k] = k * h;
  result.costate.psi = costates;
  result.costate.switching = sigma;
  return result;
}

// ---------------------------------------------------------------------------
// SIS network recovery scheduling (heuristic)
// ---------------------------------------------------------------------------

void SisNetworkControlProblem::validate() const {
  const int n = graph.node_count();
  if (n < 1) throw std::invalid_argument("sis control: empty graph");
  if (beta.rows() != n || beta.cols() != n)
    throw std::invalid_argument("sis control: beta must be n x n");
  if (c.size() != n || d.size() != n)
    throw std::invalid_argument("sis control: cost vectors must have length n");
  if ((c.array() < 0.0).any() || (d.array() < 0.0).any())
    throw std::invalid_argument("sis control: cost weights must be >= 0");
  if (!(delta_lo > 0.0) || !(delta_hi > delta_lo))
    throw std::invalid_argument("sis control: need 0 < delta_lo < delta_hi");
  if (!(horizon > 0.0) || !(dt > 0.0))
    throw std::invalid_argument("sis control: horizon and dt must be > 0");
}

namespace {

std::vector<std::string> sis_labels(int n) {
  std::vector<std::string> labels;
  for (int i = 0; i < n; ++i) labels.push_back("p_" + std::to_string(i));
  return labels;
}

}  // namespace

Trajectory simulate_sis_network_controlled(const SisNetworkControlProblem& problem,
                                           const Eigen::VectorXd& p0,
                                           const PolicySchedule& schedule) {
  problem.validate();
  const int n = problem.node_count();
  if (static_cast<int>(schedule.signals.size()) != n)
    throw std::invalid_argument("sis control: one signal per node expected");
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(n);
  Rhs rhs = [&](double, const Eigen::VectorXd& p, Eigen::VectorXd& dp) {
    Eigen::VectorXd pressure = problem.beta * p;
    dp = -delta.cwiseProduct(p) +
         pressure.cwiseProduct(Eigen::VectorXd::Ones(n) - p);
  };
  auto set_controls = [&](double t) {
    for (int i = 0; i < n; ++i) delta(i) = schedule.signals[i].value_at(t);
  };
  StateSpec spec;
  spec.dim = n;
  return simulate_on_grid(rhs, set_controls, schedule, p0, spec, sis_labels(n),
                          "network_sis_controlled", problem.horizon, problem.dt);
}

double evaluate_objective_sis(const SisNetworkControlProblem& problem,
                              const PolicySchedule& schedule,
                              const Trajectory& trajectory) {
  check_alignment(trajectory.times, schedule);
  const int n = problem.node_count();
  double j = 0.0;
  for (std::size_t k = 0; k + 1 < trajectory.times.size(); ++k) {
    double h = trajectory.times[k + 1] - trajectory.times[k];
    double mid = 0.5 * (trajectory.times[k] + trajectory.times[k + 1]);
    for (int i = 0; i < n; ++i) {
      double pmid = 0.5 * (trajectory.states(k, i) + trajectory.states(k + 1, i));
      j += h * (problem.c(i) * pmid +
                problem.d(i) * schedule.signals[i].value_at(mid));
    }
  }
  return j;
}

NetworkFbsResult fbs_sis_network(const SisNetworkControlProblem& problem,
                                 const Eigen::VectorXd& p0, const FbsOptions& opts) {
  problem.validate();
  const int n = problem.node_count();
  if (p0.size() != n)
    throw std::invalid_argument("fbs sis: initial state must have n entries");
  const long m = std::max(1L, std::lround(std::ceil(problem.horizon / problem.dt - 1e-9)));
  const double h = problem.horizon / m;
  const Eigen::MatrixXd& beta = problem.beta;

  // start from the cheap extreme
  Eigen::MatrixXd delta = Eigen::MatrixXd::Constant(m + 1, n, problem.delta_lo);
  Eigen::MatrixXd states(m + 1, n), costates(m + 1, n), sigma(m + 1, n);
  Eigen::VectorXd dk(n);

  int sweeps = 0;
  bool converged = false;
  AdaptiveRelaxation relax{opts.relaxation};
  while (sweeps < opts.max_sweeps) {
    ++sweeps;
    states.row(0) = p0;
    for (long k = 0; k < m; ++k) {
      Eigen::VectorXd x = states.row(k);
      dk = delta.row(k);
      Rhs rhs = [&](double, const Eigen::VectorXd& p, Eigen::VectorXd& dp) {
        Eigen::VectorXd pressure = beta * p;
        dp = -dk.cwiseProduct(p) +
             pressure.cwiseProduct(Eigen::VectorXd::Ones(n) - p);
      };
      rk4_step(rhs, k * h, h, x);
      states.row(k + 1) = x;
    }
    Eigen::VectorXd y(2 * n);
    y.head(n) = states.row(m);
    y.tail(n).setZero();
    costates.row(m).setZero();
    for (long k = m; k > 0; --k) {
      dk = delta.row(k - 1);
      Rhs rhs = [&](double, const Eigen::VectorXd& s, Eigen::VectorXd& dy) {
        auto p = s.head(n);
        auto psi = s.tail(n);
        Eigen::VectorXd pressure = beta * p;
        dy.head(n) = -dk.cwiseProduct(p) +
                     pressure.cwiseProduct(Eigen::VectorXd::Ones(n) - p);
        Eigen::VectorXd cross =
            beta.transpose() * psi.cwiseProduct(Eigen::VectorXd::Ones(n) - p);
        dy.tail(n) = -problem.c + psi.cwiseProduct(dk + pressure) - cross;
      };
      rk4_step(rhs, k * h, -h, y);
      costates.row(k - 1) = y.tail(n);
    }
    for (long k = 0; k <= m; ++k)
      for (int i = 0; i < n; ++i)
        sigma(k, i) = problem.d(i) - costates(k, i) * states(k, i);
    double change = 0.0;
    for (long k = 0; k <= m; ++k)
      for (int i = 0; i < n; ++i) {
        double target =
            (sigma(k, i) < -opts.dead_band) ? problem.delta_hi : problem.delta_lo;
        double next = delta(k, i) + relax.omega * (target - delta(k, i));
        change = std::max(change, std::abs(next - delta(k, i)));
        delta(k, i) = next;
      }
    if (change <= opts.control_tol) {
      converged = true;
      break;
    }
    relax.observe(change);
  }
  if (!converged)
    throw std::runtime_error("fbs_sis_network: sweep did not converge within " +
                             std::to_string(opts.max_sweeps) + " iterations");

  NetworkFbsResult result;
  result.sweeps = sweeps;
  double raw = 0.0;
  for (long k = 0; k < m; ++k)
    for (int i = 0; i < n; ++i)
      raw += h * (problem.c(i) * 0.5 * (states(k, i) + states(k + 1, i)) +
                  problem.d(i) * delta(k, i));
  result.objective_raw = raw;

  // emit the stationary control rounded to the nearest extreme, merged runs;
  // no one-switch structure is claimed for this problem
  PolicySchedule sched;
  sched.horizon = problem.horizon;
  sched.lower = Eigen::VectorXd::Constant(n, problem.delta_lo);
  sched.upper = Eigen::VectorXd::Constant(n, problem.delta_hi);
  auto rounded = [&](double v) {
    return (v - problem.delta_lo < problem.delta_hi - v) ? problem.delta_lo
                                                         : problem.delta_hi;
  };
  for (int i = 0; i < n; ++i) {
    PiecewiseConstant sig;
    sig.values.push_back(rounded(delta(0, i)));
    for (long k = 1; k < m; ++k) {
      double v = rounded(delta(k, i));
      if (v != sig.values.back()) {
        sig.switch_times.push_back(k * h);
        sig.values.push_back(v);
      }
    }
    sched.signals.push_back(sig);
  }
  sched.validate();
  result.schedule = sched;
  result.snapped = false;
  result.snap_rel_error = 0.0;

  Trajectory traj = simulate_sis_network_controlled(problem, p0, sched);
  result.objective = evaluate_objective_sis(problem, sched, traj);

  result.costate.times.resize(m + 1);
  for (long k = 0; k <= m; ++k) result.costate.times[k] = k * h;
  result.costate.psi = costates;
  result.costate.switching = sigma;
  return result;
}

}  // namespace epinet
