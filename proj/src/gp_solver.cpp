#include "epinet/posynomial.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace epinet {

GpSolution solve_gp(const GpProgram& gp, const Eigen::VectorXd& x0,
                    const GpOptions& opts) {
  const int n = gp.arity;
  if (x0.size() != n)
    throw std::invalid_argument("solve_gp: start point has wrong arity");
  if ((x0.array() <= 0.0).any())
    throw std::invalid_argument("solve_gp: start point must be positive");

  std::vector<const GpConstraint*> active;
  for (const auto& c : gp.constraints)
    if (!c.posy.empty()) active.push_back(&c);
  const int m = static_cast<int>(active.size());

  Eigen::VectorXd y = x0.array().log();
  for (const auto* c : active)
    if (c->posy.log_eval(y) >= 0.0)
      throw std::invalid_argument("solve_gp: start point violates constraint " +
                                  c->name);

  auto barrier = [&](const Eigen::VectorXd& pt, double mu, Eigen::VectorXd* grad,
                     Eigen::MatrixXd* hess) -> double {
    double value = pt(gp.objective_index);
    if (grad) {
      grad->setZero(n);
      (*grad)(gp.objective_index) = 1.0;
    }
    if (hess) hess->setZero(n, n);
    Eigen::VectorXd cg(n);
    Eigen::MatrixXd ch(n, n);
    for (const auto* c : active) {
      double q = c->posy.log_eval(pt, grad ? &cg : nullptr, hess ? &ch : nullptr);
      double s = -q;
      if (s <= 0.0) return std::numeric_limits<double>::infinity();
      value -= mu * std::log(s);
      if (grad) grad->noalias() += (mu / s) * cg;
      if (hess) {
        hess->noalias() += (mu / s) * ch;
        hess->noalias() += (mu / (s * s)) * cg * cg.transpose();
      }
    }
    return value;
  };

  GpSolution sol;
  double mu = opts.mu0;
  Eigen::VectorXd grad(n);
  Eigen::MatrixXd hess(n, n);
  while (true) {
    ++sol.outer_iterations;
    for (int it = 0; it < opts.max_newton_per_stage; ++it) {
      double value = barrier(y, mu, &grad, &hess);
      if (grad.lpNorm<Eigen::Infinity>() <= opts.newton_tol) break;

      Eigen::VectorXd step;
      double reg = 0.0;
      while (true) {
        Eigen::MatrixXd h = hess;
        if (reg > 0.0) h.diagonal().array() += reg;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
        step = ldlt.solve(-grad);
        if (ldlt.info() == Eigen::Success && grad.dot(step) < 0.0) break;
        reg = (reg == 0.0) ? 1e-10 : reg * 100.0;
        if (reg > 1e6)
          throw std::runtime_error("solve_gp: Newton system is singular");
      }

      double slope = grad.dot(step);
      double alpha = 1.0;
      bool moved = false;
      for (int bt = 0; bt < 70; ++bt) {
        double trial = barrier(y + alpha * step, mu, nullptr, nullptr);
        if (std::isfinite(trial) && trial <= value + 0.25 * alpha * slope) {
          y += alpha * step;
          moved = true;
          break;
        }
        alpha *= 0.5;
      }
      ++sol.newton_iterations;
      if (!moved)
        throw std::runtime_error(
            "solve_gp: Newton line search stalled (mu=" + std::to_string(mu) + ")");
      if (sol.newton_iterations > 100000)
        throw std::runtime_error("solve_gp: iteration budget exhausted");
    }
    sol.gap_surrogate = m * mu;
    if (sol.gap_surrogate <= opts.gap_tol) break;
    mu *= opts.mu_factor;
  }

  // Certify stationarity with the best nonnegative multipliers: the barrier
  // gradient itself bottoms out around sqrt(eps)/mu once the active slacks
  // reach the cancellation floor of log-sum-exp near zero.
  {
    Eigen::MatrixXd a(n, m);
    Eigen::VectorXd cg(n);
    for (int k = 0; k < m; ++k) {
      active[k]->posy.log_eval(y, &cg);
      a.col(k) = cg;
    }
    Eigen::VectorXd f0 = Eigen::VectorXd::Zero(n);
    f0(gp.objective_index) = 1.0;
    std::vector<int> keep(m);
    for (int k = 0; k < m; ++k) keep[k] = k;
    Eigen::VectorXd residual = f0;
    for (int round = 0; round <= m && !keep.empty(); ++round) {
      Eigen::MatrixXd sub(n, keep.size());
      for (std::size_t k = 0; k < keep.size(); ++k) sub.col(k) = a.col(keep[k]);
      Eigen::VectorXd nu =
          sub.completeOrthogonalDecomposition().solve(-f0);
      int worst = -1;
      double most_negative = -1e-12;
      for (std::size_t k = 0; k < keep.size(); ++k)
        if (nu(k) < most_negative) {
          most_negative = nu(k);
          worst = static_cast<int>(k);
        }
      if (worst < 0) {
        residual = f0 + sub * nu;
        break;
      }
      keep.erase(keep.begin() + worst);
    }
    sol.kkt_residual = residual.lpNorm<Eigen::Infinity>();
  }

  sol.x = y.array().exp();
  sol.objective = sol.x(gp.objective_index);
  return sol;
}

}  // namespace epinet
