#include "epinet/ode.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace epinet {

void StateSpec::enforce(Eigen::VectorXd& x, double t) const {
  for (int i = 0; i < x.size(); ++i) {
    double v = x(i);
    if (v < 0.0) {
      if (v < -clamp_tol) {
        std::ostringstream msg;
        msg << "integration aborted at t=" << t << ": component " << i << " = "
            << v << " below 0 beyond clamp tolerance";
        throw std::runtime_error(msg.str());
      }
      x(i) = 0.0;
    } else if (v > 1.0) {
      if (v > 1.0 + clamp_tol) {
        std::ostringstream msg;
        msg << "integration aborted at t=" << t << ": component " << i << " = "
            << v << " above 1 beyond clamp tolerance";
        throw std::runtime_error(msg.str());
      }
      x(i) = 1.0;
    }
  }
  for (const auto& group : unit_sum_groups) {
    double s = 0.0;
    for (int i : group) s += x(i);
    if (std::abs(s - 1.0) > sum_tol) {
      std::ostringstream msg;
      msg << "integration aborted at t=" << t << ": compartment sum " << s
          << " deviates from 1 beyond tolerance";
      throw std::runtime_error(msg.str());
    }
  }
}

std::string Trajectory::to_csv() const {
  std::ostringstream out;
  out << "t";
  for (const auto& l : labels) out << "," << l;
  out << "\n";
  char buf[40];
  for (int k = 0; k < samples(); ++k) {
    std::snprintf(buf, sizeof(buf), "%.12g", times[k]);
    out << buf;
    for (int j = 0; j < states.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.12g", states(k, j));
      out << "," << buf;
    }
    out << "\n";
  }
  return out.str();
}

void rk4_step(const Rhs& rhs, double t, double h, Eigen::VectorXd& x) {
  const int n = static_cast<int>(x.size());
  Eigen::VectorXd k1(n), k2(n), k3(n), k4(n);
  rhs(t, x, k1);
  rhs(t + 0.5 * h, x + 0.5 * h * k1, k2);
  rhs(t + 0.5 * h, x + 0.5 * h * k2, k3);
  rhs(t + h, x + h * k3, k4);
  x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Trajectory integrate(const OdeModel& model, const Eigen::VectorXd& x0,
                     double horizon, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("integrate: dt must be > 0");
  if (horizon < 0.0) throw std::invalid_argument("integrate: horizon must be >= 0");
  if (x0.size() != model.spec.dim)
    throw std::invalid_argument("integrate: initial state has wrong dimension");

  Eigen::VectorXd x = x0;
  model.spec.enforce(x, 0.0);

  long full = static_cast<long>(std::floor(horizon / dt + 1e-9));
  double rem = horizon - static_cast<double>(full) * dt;
  if (rem < 1e-12 * std::max(1.0, horizon)) rem = 0.0;
  long total = full + (rem > 0.0 ? 1 : 0);

  Trajectory traj;
  traj.labels = model.labels;
  traj.model = model.name;
  traj.times.reserve(total + 1);
  traj.states.resize(total + 1, model.spec.dim);
  traj.times.push_back(0.0);
  traj.states.row(0) = x;

  for (long k = 0; k < total; ++k) {
    double t = static_cast<double>(k) * dt;
    double h = (k < full) ? dt : rem;
    rk4_step(model.rhs, t, h, x);
    double tn = (k + 1 == total) ? horizon : static_cast<double>(k + 1) * dt;
    model.spec.enforce(x, tn);
    traj.times.push_back(tn);
    traj.states.row(k + 1) = x;
  }
  return traj;
}

}  // namespace epinet
