#pragma once

// Reference computations written directly from the definitions with explicit
// loops. They share nothing with the library code paths they check.

#include "gcsr/types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace oracle {

using gcsr::Matrix;

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = u(rng);
  return m;
}

inline Matrix random_symmetric_nonneg(Eigen::Index n, std::mt19937_64& rng, double density = 0.5) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix a = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (u(rng) < density) a(i, j) = a(j, i) = u(rng) + 0.1;
  return a;
}

inline Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix c = Matrix::Zero(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (Eigen::Index l = 0; l < a.cols(); ++l) s += a(i, l) * b(l, j);
      c(i, j) = s;
    }
  return c;
}

// out_ij = ã_ij / sqrt(d̃_i d̃_j) with ã = a (+ I)
inline Matrix normalize(const Matrix& a, bool self_loops = true) {
  const Eigen::Index n = a.rows();
  Matrix t = a;
  if (self_loops)
    for (Eigen::Index i = 0; i < n; ++i) t(i, i) += 1.0;
  std::vector<double> deg(static_cast<std::size_t>(n), 0.0);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) deg[static_cast<std::size_t>(i)] += t(i, j);
  Matrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      out(i, j) = t(i, j) / std::sqrt(deg[static_cast<std::size_t>(i)] * deg[static_cast<std::size_t>(j)]);
  return out;
}

inline Matrix power_apply(const Matrix& a, const Matrix& x, int k) {
  Matrix out = x;
  for (int i = 0; i < k; ++i) out = naive_matmul(a, out);
  return out;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

// Central differences of f at x along every coordinate listed in `coords`.
inline std::vector<double> central_differences(const std::function<double(const Matrix&)>& f, const Matrix& x,
                                               const std::vector<Eigen::Index>& coords, double eps) {
  std::vector<double> out;
  for (Eigen::Index c : coords) {
    Matrix plus = x;
    Matrix minus = x;
    plus.data()[c] += eps;
    minus.data()[c] -= eps;
    out.push_back((f(plus) - f(minus)) / (2.0 * eps));
  }
  return out;
}

inline double relative_error(double analytic, double numeric, double floor = 1e-8) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Row c: fraction of edge endpoints of class-c nodes that land in each class.
inline Matrix class_correlation(const Matrix& adj, std::span<const int> labels, int classes) {
  Matrix counts = Matrix::Zero(classes, classes);
  for (Eigen::Index i = 0; i < adj.rows(); ++i)
    for (Eigen::Index j = 0; j < adj.cols(); ++j)
      if (i != j && adj(i, j) != 0.0) counts(labels[static_cast<std::size_t>(i)], labels[static_cast<std::size_t>(j)]) += 1.0;
  for (int c = 0; c < classes; ++c) {
    const double s = counts.row(c).sum();
    if (s > 0) counts.row(c) /= s;
  }
  return counts;
}

// Mean cosine between weighted neighbour-label histograms over pairs u != v.
inline Matrix ccns(const Matrix& adj, std::span<const int> labels, int classes) {
  const Eigen::Index n = adj.rows();
  Matrix hist = Matrix::Zero(n, classes);
  std::vector<bool> live(static_cast<std::size_t>(n), false);
  for (Eigen::Index u = 0; u < n; ++u) {
    for (Eigen::Index v = 0; v < n; ++v) hist(u, labels[static_cast<std::size_t>(v)]) += adj(u, v);
    live[static_cast<std::size_t>(u)] = hist.row(u).sum() > 0;
  }
  Matrix sum = Matrix::Zero(classes, classes);
  Matrix cnt = Matrix::Zero(classes, classes);
  for (Eigen::Index u = 0; u < n; ++u) {
    if (!live[static_cast<std::size_t>(u)]) continue;
    for (Eigen::Index v = 0; v < n; ++v) {
      if (v == u || !live[static_cast<std::size_t>(v)]) continue;
      double dot = 0, nu = 0, nv = 0;
      for (int c = 0; c < classes; ++c) {
        dot += hist(u, c) * hist(v, c);
        nu += hist(u, c) * hist(u, c);
        nv += hist(v, c) * hist(v, c);
      }
      const int cu = labels[static_cast<std::size_t>(u)];
      const int cv = labels[static_cast<std::size_t>(v)];
      sum(cu, cv) += dot / std::sqrt(nu * nv);
      cnt(cu, cv) += 1.0;
    }
  }
  Matrix out = Matrix::Zero(classes, classes);
  for (int a = 0; a < classes; ++a)
    for (int b = 0; b < classes; ++b) out(a, b) = cnt(a, b) > 0 ? sum(a, b) / cnt(a, b) : 0.0;
  return out;
}

inline double silhouette(const Matrix& x, std::span<const int> labels) {
  const Eigen::Index n = x.rows();
  int classes = 0;
  for (int y : labels) classes = std::max(classes, y + 1);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<double> sum(static_cast<std::size_t>(classes), 0.0);
    std::vector<int> cnt(static_cast<std::size_t>(classes), 0);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      double d2 = 0;
      for (Eigen::Index f = 0; f < x.cols(); ++f) d2 += (x(i, f) - x(j, f)) * (x(i, f) - x(j, f));
      sum[static_cast<std::size_t>(labels[static_cast<std::size_t>(j)])] += std::sqrt(d2);
      cnt[static_cast<std::size_t>(labels[static_cast<std::size_t>(j)])] += 1;
    }
    const auto own = static_cast<std::size_t>(labels[static_cast<std::size_t>(i)]);
    if (cnt[own] == 0) continue;
    const double a = sum[own] / cnt[own];
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < sum.size(); ++c)
      if (c != own && cnt[c] > 0) b = std::min(b, sum[c] / cnt[c]);
    const double m = std::max(a, b);
    if (m > 0) total += (b - a) / m;
  }
  return total / static_cast<double>(n);
}

}  // namespace oracle
