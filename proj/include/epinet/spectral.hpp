#pragma once

#include <Eigen/Dense>

namespace epinet {

struct PowerOptions {
  double vector_tol = 1e-12;    // inf-norm change of the iterate
  double residual_tol = 1e-10;  // inf-norm of M v - lambda v
  int max_iterations = 100000;
};

/// Dominant real eigenvalue with positive left/right eigenvectors
/// (both normalized to sum 1).
struct SpectralResult {
  double lambda_max = 0.0;
  Eigen::VectorXd right;
  Eigen::VectorXd left;
  int iterations = 0;
  double residual = 0.0;
};

/// Power iteration on nonnegative or Metzler matrices (negative entries on
/// the diagonal only). The matrix is shifted by phi = max(0, -min_i m_ii) + 1
/// so the dominant eigenvalue of the shifted iterate is simple in modulus for
/// the common bipartite-spectrum cases; phi is subtracted from the result.
/// Deterministic all-ones start. Throws std::runtime_error on
/// non-convergence and std::invalid_argument for matrices with negative
/// off-diagonal entries.
SpectralResult lambda_max(const Eigen::MatrixXd& m, const PowerOptions& opts = {});

}  // namespace epinet
