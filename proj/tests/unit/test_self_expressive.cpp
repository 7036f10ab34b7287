#include "gcsr/error.hpp"
#include "gcsr/self_expressive.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace gcsr;

namespace {

SelfExpressiveProblem random_problem(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d, double alpha, double beta) {
  SelfExpressiveProblem p;
  p.features = oracle::random_matrix(n, d, rng);
  p.prior = oracle::random_matrix(n, n, rng, 0.0, 1.0);
  p.history = oracle::random_matrix(n, n, rng, -0.5, 1.0);
  p.alpha = alpha;
  p.beta = beta;
  return p;
}

// Objective evaluated straight from its three Frobenius terms.
double objective_oracle(const SelfExpressiveProblem& p, const Matrix& z) {
  const Matrix xt = p.features.transpose();
  const Matrix r = xt - oracle::naive_matmul(xt, z);
  return r.squaredNorm() + p.alpha * (z - p.prior).squaredNorm() + p.beta * (z - p.history).squaredNorm();
}

double oracle_tol(const SelfExpressiveProblem& p) { return 1e-8 * (p.alpha + p.beta); }

}  // namespace

TEST_CASE("zero features collapse to the average of prior and history") {
  std::mt19937_64 rng(1);
  SelfExpressiveProblem p = random_problem(rng, 5, 3, 1.0, 1.0);
  p.features.setZero();
  const Matrix expected = 0.5 * (p.prior + p.history);
  CHECK(oracle::max_abs_diff(solve_z(p), expected) <= 1e-15);
  CHECK(oracle::max_abs_diff(iterative_oracle(p, 1e-10, 100000), expected) <= 1e-10);
}

TEST_CASE("scalar instance") {
  SelfExpressiveProblem p;
  p.features = Matrix::Ones(1, 1);
  p.prior = Matrix::Ones(1, 1);
  p.history = Matrix::Ones(1, 1);
  CHECK(solve_z(p)(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("solve_z agrees with the gradient-descent oracle") {
  std::mt19937_64 rng(2);
  SUBCASE("N' = 20, d = 8") {
    const SelfExpressiveProblem p = random_problem(rng, 20, 8, 1.0, 1.0);
    const Matrix z = solve_z(p);
    CHECK((z - iterative_oracle(p, oracle_tol(p), 1000000)).norm() <= 1e-6);
    CHECK(stationarity_residual(p, z).norm() <= 1e-10);
  }
  SUBCASE("50 random instances") {
    for (int trial = 0; trial < 50; ++trial) {
      const auto n = std::uniform_int_distribution<Eigen::Index>(1, 20)(rng);
      const auto d = std::uniform_int_distribution<Eigen::Index>(1, 10)(rng);
      const double alpha = std::pow(10.0, std::uniform_real_distribution<double>(-1, 3)(rng));
      const double beta = std::pow(10.0, std::uniform_real_distribution<double>(-1, 3)(rng));
      const SelfExpressiveProblem p = random_problem(rng, n, d, alpha, beta);
      const Matrix z = solve_z(p);
      const Matrix zo = iterative_oracle(p, oracle_tol(p), 1000000);
      CHECK((z - zo).norm() <= 1e-6);
      CHECK(stationarity_residual(p, z).norm() <= 1e-8 * (1.0 + z.norm()));
      CHECK(objective_oracle(p, zo) <= objective_oracle(p, p.prior));
      CHECK(objective_oracle(p, zo) <= objective_oracle(p, p.history));
    }
  }
}

TEST_CASE("objective and residual agree with direct evaluation") {
  std::mt19937_64 rng(3);
  const SelfExpressiveProblem p = random_problem(rng, 6, 4, 0.7, 2.0);
  const Matrix z = oracle::random_matrix(6, 6, rng);
  CHECK(objective(p, z) == doctest::Approx(objective_oracle(p, z)).epsilon(1e-12));
  // The residual is the objective gradient: compare with central differences.
  const Matrix g = stationarity_residual(p, z);
  std::vector<Eigen::Index> coords;
  for (Eigen::Index i = 0; i < z.size(); i += 5) coords.push_back(i);
  const auto fd = oracle::central_differences([&](const Matrix& zz) { return objective_oracle(p, zz); }, z, coords, 1e-6);
  for (std::size_t i = 0; i < coords.size(); ++i) CHECK(oracle::relative_error(g.data()[coords[i]], fd[i]) <= 1e-6);
}

TEST_CASE("limits: large alpha pins Z to P, large beta pins Z to Z_h") {
  std::mt19937_64 rng(4);
  SelfExpressiveProblem p = random_problem(rng, 10, 5, 1e6, 0.0);
  CHECK((solve_z(p) - p.prior).norm() / p.prior.norm() <= 1e-3);
  p.alpha = 0.0;
  p.beta = 1e6;
  CHECK((solve_z(p) - p.history).norm() / p.history.norm() <= 1e-3);
}

TEST_CASE("solution beats random perturbations") {
  std::mt19937_64 rng(5);
  const SelfExpressiveProblem p = random_problem(rng, 12, 6, 0.5, 3.0);
  const Matrix z = solve_z(p);
  const double best = objective(p, z);
  for (int i = 0; i < 100; ++i) {
    Matrix delta = oracle::random_matrix(12, 12, rng);
    delta *= 1e-3 / delta.norm();
    CHECK(best <= objective(p, z + delta));
  }
}

TEST_CASE("ill-posed and malformed problems are rejected") {
  std::mt19937_64 rng(6);
  SelfExpressiveProblem p = random_problem(rng, 4, 2, 0.0, 0.0);
  CHECK_THROWS_AS(solve_z(p), ValidationError);
  p.alpha = 1.0;
  p.features(0, 0) = std::nan("");
  CHECK_THROWS_AS(solve_z(p), ValidationError);
  p = random_problem(rng, 4, 2, 1.0, 1.0);
  p.prior = Matrix::Zero(3, 3);
  CHECK_THROWS_AS(solve_z(p), ShapeError);
}

TEST_CASE("iterative oracle reports non-convergence") {
  std::mt19937_64 rng(7);
  const SelfExpressiveProblem p = random_problem(rng, 8, 4, 0.1, 0.1);
  try {
    iterative_oracle(p, 1e-12, 3);
    FAIL("expected NonConvergenceError");
  } catch (const NonConvergenceError& e) {
    CHECK(e.residual() > 1e-12);
  }
}

TEST_CASE("symmetrize") {
  Matrix z(2, 2);
  z << 1, -2, 0, 3;
  Matrix expected(2, 2);
  expected << 1, 1, 1, 3;
  CHECK(symmetrize(z).matrix == expected);

  std::mt19937_64 rng(8);
  const Matrix s = oracle::random_symmetric_nonneg(5, rng);
  CHECK(symmetrize(s).matrix == s);

  Matrix anti = oracle::random_matrix(4, 4, rng);
  anti = Matrix(anti - anti.transpose());
  CHECK(symmetrize(anti).matrix == anti.cwiseAbs());

  const Matrix r = oracle::random_matrix(6, 6, rng);
  const Matrix a = symmetrize(r).matrix;
  CHECK(a == a.transpose());
  CHECK(a.minCoeff() >= 0.0);
}

TEST_CASE("sparsify") {
  Matrix m(2, 2);
  m << 0.5, 0.01, 0.01, 0.2;
  CHECK(sparsify({m}, 0.0).matrix == m);
  Matrix expected(2, 2);
  expected << 0.5, 0, 0, 0.2;
  CHECK(sparsify({m}, 0.1).matrix == expected);
}
