#pragma once

#include "gcsr/types.hpp"

namespace gcsr {

/// min_Z |X'ᵀ - X'ᵀ Z|² + alpha |Z - P|² + beta |Z - Z_h|²  (Frobenius norms)
struct SelfExpressiveProblem {
  Matrix features;  // X', N' x d
  Matrix prior;     // P, N' x N'
  Matrix history;   // Z_h, N' x N'
  double alpha = 1.0;
  double beta = 1.0;

  Eigen::Index size() const { return features.rows(); }
  void validate() const;
};

double objective(const SelfExpressiveProblem& problem, const Matrix& z);

// -2X'(X'ᵀ - X'ᵀZ) + 2 alpha (Z - P) + 2 beta (Z - Z_h); zero at the minimiser.
Matrix stationarity_residual(const SelfExpressiveProblem& problem, const Matrix& z);

/// Closed-form minimiser
///   Z = (X'X'ᵀ + (alpha + beta) I)^{-1} (X'X'ᵀ + alpha P + beta Z_h)
/// via a Cholesky factorization of the SPD left-hand side.
Matrix solve_z(const SelfExpressiveProblem& problem);

// Plain gradient descent on the objective with step 1 / (2 (lambda_max(X'X'ᵀ) + alpha + beta)),
// stopping once the gradient Frobenius norm drops to `tol`.
Matrix iterative_oracle(const SelfExpressiveProblem& problem, double tol, int max_iters);

struct SyntheticAdjacency {
  Matrix matrix;  // symmetric, nonnegative
};

// A' = (|Z| + |Z|ᵀ) / 2
SyntheticAdjacency symmetrize(const Matrix& z);

// Zeroes entries strictly below `threshold`; threshold <= 0 is a no-op.
SyntheticAdjacency sparsify(SyntheticAdjacency adj, double threshold);

}  // namespace gcsr
