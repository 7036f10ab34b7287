#include "gcsr/self_expressive.hpp"

#include "gcsr/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace gcsr {

void SelfExpressiveProblem::validate() const {
  const Eigen::Index n = features.rows();
  if (prior.rows() != n || prior.cols() != n) throw ShapeError("prior must be N' x N'");
  if (history.rows() != n || history.cols() != n) throw ShapeError("history must be N' x N'");
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw ValidationError("alpha and beta must be nonnegative");
  if (!(alpha + beta > 0.0)) throw ValidationError("ill-posed self-expressive problem: alpha + beta must be > 0");
  if (!std::isfinite(alpha) || !std::isfinite(beta)) throw ValidationError("alpha and beta must be finite");
  if (!features.allFinite()) throw ValidationError("features contain non-finite values");
  if (!prior.allFinite()) throw ValidationError("prior contains non-finite values");
  if (!history.allFinite()) throw ValidationError("history contains non-finite values");
}

double objective(const SelfExpressiveProblem& problem, const Matrix& z) {
  const Matrix xt = problem.features.transpose();
  return (xt - xt * z).squaredNorm() + problem.alpha * (z - problem.prior).squaredNorm() +
         problem.beta * (z - problem.history).squaredNorm();
}

Matrix stationarity_residual(const SelfExpressiveProblem& problem, const Matrix& z) {
  const Matrix& x = problem.features;
  const Matrix xt = x.transpose();
  return -2.0 * x * (xt - xt * z) + 2.0 * problem.alpha * (z - problem.prior) +
         2.0 * problem.beta * (z - problem.history);
}

Matrix solve_z(const SelfExpressiveProblem& problem) {
  problem.validate();
  const Eigen::Index n = problem.size();
  Matrix gram = Matrix::Zero(n, n);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(problem.features);
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();

  Matrix rhs = gram + problem.alpha * problem.prior + problem.beta * problem.history;
  gram.diagonal().array() += problem.alpha + problem.beta;
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) throw NumericError("Cholesky factorization of X'X'ᵀ + (alpha+beta)I failed");
  llt.solveInPlace(rhs);
  return rhs;
}

Matrix iterative_oracle(const SelfExpressiveProblem& problem, double tol, int max_iters) {
  problem.validate();
  if (!(tol > 0.0)) throw ValidationError("tol must be > 0");
  const Matrix& x = problem.features;
  const Eigen::Index n = problem.size();
  const Matrix gram = x * x.transpose();
  const double lambda_max =
      n > 0 ? Eigen::SelfAdjointEigenSolver<Matrix>(gram, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff() : 0.0;
  const double step = 1.0 / (2.0 * (std::max(lambda_max, 0.0) + problem.alpha + problem.beta));

  const Matrix target = gram + problem.alpha * problem.prior + problem.beta * problem.history;
  const double reg = problem.alpha + problem.beta;
  Matrix z = problem.history;
  double norm = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    const Matrix grad = 2.0 * (gram * z + reg * z - target);
    norm = grad.norm();
    if (norm <= tol) return z;
    z -= step * grad;
  }
  throw NonConvergenceError("iterative oracle did not converge in " + std::to_string(max_iters) +
                                " iterations (gradient norm " + std::to_string(norm) + ")",
                            norm);
}

SyntheticAdjacency symmetrize(const Matrix& z) {
  if (z.rows() != z.cols()) throw ShapeError("symmetrize expects a square matrix");
  const Matrix a = z.cwiseAbs();
  return {0.5 * (a + a.transpose())};
}

SyntheticAdjacency sparsify(SyntheticAdjacency adj, double threshold) {
  if (threshold <= 0.0) return adj;
  adj.matrix = (adj.matrix.array() < threshold).select(0.0, adj.matrix);
  return adj;
}

}  // namespace gcsr
