#include "epinet/master_equation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "epinet/ode.hpp"

namespace epinet {

Eigen::VectorXd point_mass_distribution(int n, const std::vector<Compartment>& x0) {
  if (static_cast<int>(x0.size()) != n)
    throw std::invalid_argument("point mass: state must have one label per node");
  std::size_t config = 0;
  for (int i = 0; i < n; ++i)
    if (x0[i] == Compartment::I) config |= (std::size_t{1} << i);
  Eigen::VectorXd d = Eigen::VectorXd::Zero(std::ptrdiff_t{1} << n);
  d(static_cast<Eigen::Index>(config)) = 1.0;
  return d;
}

Eigen::VectorXd MasterSolution::marginal_at(double t) const {
  int best = 0;
  double gap = std::abs(times[0] - t);
  for (int k = 1; k < static_cast<int>(times.size()); ++k) {
    double g = std::abs(times[k] - t);
    if (g < gap) {
      gap = g;
      best = k;
    }
  }
  return marginals.row(best);
}

MasterSolution exact_master_equation(const Graph& g, const RateModel& rates,
                                     const Eigen::VectorXd& x0_distribution,
                                     double horizon, double dt,
                                     const std::vector<double>& sample_times) {
  const int n = g.node_count();
  if (n > 12)
    throw std::invalid_argument(
        "exact_master_equation: state space 2^N limited to N <= 12");
  if (rates.node_count() != n)
    throw std::invalid_argument("exact_master_equation: rate model mismatch");
  const Eigen::Index size = Eigen::Index{1} << n;
  if (x0_distribution.size() != size)
    throw std::invalid_argument(
        "exact_master_equation: distribution must have 2^N entries");
  if ((x0_distribution.array() < 0.0).any() ||
      std::abs(x0_distribution.sum() - 1.0) > 1e-10)
    throw std::invalid_argument(
        "exact_master_equation: distribution must be nonnegative and sum to 1");
  if (!(dt > 0.0)) throw std::invalid_argument("exact_master_equation: dt must be > 0");

  // Record points: every step by default, or exactly the requested times.
  std::vector<double> record;
  if (sample_times.empty()) {
    long steps = std::lround(std::ceil(horizon / dt - 1e-9));
    record.reserve(steps);
    for (long k = 1; k < steps; ++k) record.push_back(k * dt);
    record.push_back(horizon);
  } else {
    record = sample_times;
    if (!std::is_sorted(record.begin(), record.end()))
      throw std::invalid_argument("exact_master_equation: sample times not sorted");
    if (record.front() < 0.0 || record.back() > horizon + 1e-12)
      throw std::invalid_argument(
          "exact_master_equation: sample times outside [0, horizon]");
  }

  // Single-node flips, flattened.
  struct Transition {
    Eigen::Index from, to;
    double rate;
  };
  std::vector<Transition> transitions;
  for (Eigen::Index s = 0; s < size; ++s) {
    for (int i = 0; i < n; ++i) {
      bool inf = (s >> i) & 1;
      if (inf) {
        transitions.push_back({s, s & ~(Eigen::Index{1} << i), rates.delta(i)});
      } else {
        double pressure = 0.0;
        for (int j = 0; j < n; ++j)
          if ((s >> j) & 1) pressure += rates.beta(i, j);
        if (pressure > 0.0)
          transitions.push_back({s, s | (Eigen::Index{1} << i), pressure});
      }
    }
  }

  Rhs rhs = [&transitions](double, const Eigen::VectorXd& p, Eigen::VectorXd& dp) {
    dp.setZero();
    for (const auto& tr : transitions) {
      double flow = tr.rate * p(tr.from);
      dp(tr.from) -= flow;
      dp(tr.to) += flow;
    }
  };

  auto enforce = [size](Eigen::VectorXd& p, double t) {
    for (Eigen::Index s = 0; s < size; ++s) {
      if (p(s) < 0.0) {
        if (p(s) < -1e-12)
          throw std::runtime_error(
              "exact_master_equation: negative probability at t=" + std::to_string(t));
        p(s) = 0.0;
      }
    }
    if (std::abs(p.sum() - 1.0) > 1e-10)
      throw std::runtime_error(
          "exact_master_equation: probability mass drifted at t=" + std::to_string(t));
  };

  MasterSolution sol;
  Eigen::VectorXd p = x0_distribution;
  std::vector<Eigen::VectorXd> rows;
  auto push_row = [&](double t) {
    sol.times.push_back(t);
    rows.push_back(p);
  };

  bool record_zero = sample_times.empty() || record.front() == 0.0;
  if (record_zero && !record.empty() && record.front() == 0.0)
    record.erase(record.begin());
  if (sample_times.empty() || record_zero) push_row(0.0);

  double t = 0.0;
  for (double target : record) {
    double span = target - t;
    if (span < -1e-12)
      throw std::invalid_argument("exact_master_equation: times not increasing");
    long steps = std::max<long>(1, std::lround(std::ceil(span / dt - 1e-9)));
    double h = span / steps;
    for (long k = 0; k < steps; ++k) {
      rk4_step(rhs, t + k * h, h, p);
    }
    t = target;
    enforce(p, t);
    push_row(t);
  }

  const int nt = static_cast<int>(sol.times.size());
  sol.distribution.resize(nt, size);
  sol.marginals.resize(nt, n);
  for (int k = 0; k < nt; ++k) {
    sol.distribution.row(k) = rows[k];
    for (int i = 0; i < n; ++i) {
      double m = 0.0;
      for (Eigen::Index s = 0; s < size; ++s)
        if ((s >> i) & 1) m += rows[k](s);
      sol.marginals(k, i) = m;
    }
  }
  return sol;
}

}  // namespace epinet
