#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace epinet {

/// Sum of monomials c_k * prod_i x_i^{a_{k,i}} with c_k > 0. In log
/// coordinates y = log x each posynomial is a log-sum-exp, hence convex.
class Posynomial {
 public:
  explicit Posynomial(int arity) : arity_(arity) {}

  int arity() const { return arity_; }
  int term_count() const { return static_cast<int>(coeffs_.size()); }
  bool empty() const { return coeffs_.size() == 0; }

  void add_term(double coeff, const Eigen::VectorXd& exponents);
  void add_constant(double coeff);

  double eval(const Eigen::VectorXd& x) const;

  /// log q(exp y); grad/hess (optional) accumulate nothing, they are
  /// overwritten.
  double log_eval(const Eigen::VectorXd& y, Eigen::VectorXd* grad = nullptr,
                  Eigen::MatrixXd* hess = nullptr) const;

  /// Divides every coefficient; used to bring "q <= c" into "q/c <= 1".
  void scale(double factor);

  const Eigen::VectorXd& coefficients() const { return coeffs_; }
  const Eigen::MatrixXd& exponents() const { return expo_; }

 private:
  int arity_;
  Eigen::VectorXd coeffs_{0};
  Eigen::MatrixXd expo_{0, 0};
};

struct GpConstraint {
  Posynomial posy;   // posy(x) <= 1
  std::string name;  // for diagnostics
};

/// minimize x[objective_index] subject to posynomial constraints <= 1,
/// all variables > 0.
struct GpProgram {
  int arity = 0;
  int objective_index = 0;
  std::vector<std::string> var_names;
  std::vector<GpConstraint> constraints;
};

struct GpOptions {
  double mu0 = 1.0;
  double mu_factor = 0.1;
  double gap_tol = 1e-9;      // stop when m * mu <= gap_tol
  double newton_tol = 1e-9;   // inf-norm of the barrier gradient
  int max_newton_per_stage = 200;
};

struct GpSolution {
  Eigen::VectorXd x;
  double objective = 0.0;
  int outer_iterations = 0;
  int newton_iterations = 0;
  double kkt_residual = 0.0;
  double gap_surrogate = 0.0;
};

/// Log-barrier interior-point solve of the log-transformed convex program.
/// x0 must be strictly feasible. Throws std::runtime_error on Newton failure
/// and std::invalid_argument when x0 violates a constraint (named in the
/// message).
GpSolution solve_gp(const GpProgram& gp, const Eigen::VectorXd& x0,
                    const GpOptions& opts = {});

}  // namespace epinet
