#include "epinet/spectral.hpp"

#include <sstream>
#include <stdexcept>

namespace epinet {

namespace {

struct OneSided {
  double lambda;
  Eigen::VectorXd vec;  // sum = 1
  int iterations;
  double residual;
};

OneSided power_iterate(const Eigen::MatrixXd& m, double shift, const PowerOptions& opts) {
  const int n = static_cast<int>(m.rows());
  Eigen::MatrixXd ms = m + shift * Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / n);
  Eigen::VectorXd z = ms * x;
  double residual = 0.0;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    // With shift >= 1 the iterate keeps a positive sum for any nonzero
    // nonnegative start, so the normalizer stays > 0.
    Eigen::VectorXd y = z / z.sum();
    double change = (y - x).lpNorm<Eigen::Infinity>();
    Eigen::VectorXd zn = ms * y;
    double lambda_shifted = y.dot(zn) / y.dot(y);
    residual = (zn - lambda_shifted * y).lpNorm<Eigen::Infinity>();
    if (change <= opts.vector_tol && residual <= opts.residual_tol)
      return {lambda_shifted - shift, y, it, residual};
    x = std::move(y);
    z = std::move(zn);
  }
  std::ostringstream msg;
  msg << "lambda_max: power iteration did not converge after "
      << opts.max_iterations << " iterations on a " << n << "x" << n
      << " matrix (residual " << residual
      << "); the matrix may be reducible with tied dominant moduli";
  throw std::runtime_error(msg.str());
}

// Kahn's algorithm on the off-diagonal support. Arcs run j -> i for
// m(i, j) != 0.
bool support_is_acyclic(const Eigen::MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  std::vector<int> out_deg(n, 0);  // arcs leaving j = nonzeros in column j
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      if (i != j && m(i, j) != 0.0) ++out_deg[j];
  std::vector<int> stack;
  for (int j = 0; j < n; ++j)
    if (out_deg[j] == 0) stack.push_back(j);
  int removed = 0;
  std::vector<char> gone(n, 0);
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    gone[v] = 1;
    ++removed;
    // dropping v removes the arcs j -> v
    for (int j = 0; j < n; ++j)
      if (!gone[j] && j != v && m(v, j) != 0.0 && --out_deg[j] == 0)
        stack.push_back(j);
  }
  return removed == n;
}

}  // namespace

SpectralResult lambda_max(const Eigen::MatrixXd& m, const PowerOptions& opts) {
  if (m.rows() != m.cols())
    throw std::invalid_argument("lambda_max: matrix must be square");
  const int n = static_cast<int>(m.rows());
  if (n == 0) throw std::invalid_argument("lambda_max: empty matrix");
  double min_diag = m.diagonal().minCoeff();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && m(i, j) < 0.0)
        throw std::invalid_argument(
            "lambda_max: negative off-diagonal entry; matrix is neither "
            "nonnegative nor Metzler");

  // Acyclic support with a uniform diagonal means the matrix is
  // permutation-triangular with a single repeated eigenvalue; the shifted
  // iteration would stall on the defective block, but the answer is exact: the
  // diagonal value, with eigenvectors on a sink (zero column) and a source
  // (zero row) of the support.
  double max_diag = m.diagonal().maxCoeff();
  if (max_diag - min_diag == 0.0 && support_is_acyclic(m)) {
    SpectralResult r;
    r.lambda_max = max_diag;
    r.right = Eigen::VectorXd::Zero(n);
    r.left = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < n; ++j) {
      bool zero_col = true;
      for (int i = 0; i < n; ++i)
        if (i != j && m(i, j) != 0.0) zero_col = false;
      if (zero_col) {
        r.right(j) = 1.0;
        break;
      }
    }
    for (int i = 0; i < n; ++i) {
      bool zero_row = true;
      for (int j = 0; j < n; ++j)
        if (i != j && m(i, j) != 0.0) zero_row = false;
      if (zero_row) {
        r.left(i) = 1.0;
        break;
      }
    }
    r.iterations = 0;
    r.residual = 0.0;
    return r;
  }

  double shift = std::max(0.0, -min_diag) + 1.0;
  OneSided right = power_iterate(m, shift, opts);
  OneSided left = power_iterate(m.transpose(), shift, opts);

  SpectralResult r;
  r.lambda_max = right.lambda;
  r.right = right.vec;
  r.left = left.vec;
  r.iterations = right.iterations + left.iterations;
  r.residual = right.residual;
  return r;
}

}  // namespace epinet
