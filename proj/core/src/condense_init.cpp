#include "gcsr/condense_init.hpp"

#include "gcsr/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace gcsr {

SyntheticLabels allocate_labels(std::span<const int> labels, int num_classes, int target) {
  if (num_classes <= 0) throw ValidationError("num_classes must be positive");
  if (labels.empty()) throw ValidationError("allocate_labels: empty label vector");
  if (target < num_classes) {
    throw ValidationError("infeasible condensed size: N' = " + std::to_string(target) + " is smaller than C = " +
                          std::to_string(num_classes));
  }
  std::vector<long long> count(static_cast<std::size_t>(num_classes), 0);
  for (int y : labels) {
    if (y < 0 || y >= num_classes) throw ValidationError("label " + std::to_string(y) + " out of range");
    ++count[static_cast<std::size_t>(y)];
  }
  const auto n = static_cast<long long>(labels.size());

  // Exact integer quotas: target * count / n = floor + rem / n.
  std::vector<int> alloc(static_cast<std::size_t>(num_classes));
  std::vector<long long> rem(static_cast<std::size_t>(num_classes));
  int assigned = 0;
  for (int c = 0; c < num_classes; ++c) {
    const long long q = static_cast<long long>(target) * count[static_cast<std::size_t>(c)];
    alloc[static_cast<std::size_t>(c)] = static_cast<int>(q / n);
    rem[static_cast<std::size_t>(c)] = q % n;
    assigned += alloc[static_cast<std::size_t>(c)];
  }
  std::vector<int> order(static_cast<std::size_t>(num_classes));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return rem[static_cast<std::size_t>(a)] > rem[static_cast<std::size_t>(b)];
  });
  for (int i = 0; assigned < target; ++i, ++assigned) ++alloc[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];

  for (int c = 0; c < num_classes; ++c) {
    if (alloc[static_cast<std::size_t>(c)] > 0) continue;
    const auto largest = std::max_element(alloc.begin(), alloc.end());
    --*largest;
    alloc[static_cast<std::size_t>(c)] = 1;
  }

  SyntheticLabels out;
  out.per_class_counts = alloc;
  for (int c = 0; c < num_classes; ++c) out.labels.insert(out.labels.end(), static_cast<std::size_t>(alloc[static_cast<std::size_t>(c)]), c);
  return out;
}

int condensed_size(const GraphDataset& dataset, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ValidationError("ratio must be in (0,1)");
  const int base = dataset.mode == Mode::Transductive ? dataset.num_nodes() : static_cast<int>(dataset.train.size());
  return std::max(dataset.num_classes, static_cast<int>(std::lround(ratio * base)));
}

NodeList sample_per_class(std::span<const int> labels, std::span<const int> pool,
                          std::span<const int> per_class_counts, std::uint64_t seed) {
  const auto num_classes = per_class_counts.size();
  std::vector<NodeList> by_class(num_classes);
  for (int i : pool) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y >= 0 && static_cast<std::size_t>(y) < num_classes) by_class[static_cast<std::size_t>(y)].push_back(i);
  }
  std::mt19937_64 gen(seed);
  NodeList out;
  for (std::size_t c = 0; c < num_classes; ++c) {
    NodeList& cand = by_class[c];
    const int need = per_class_counts[c];
    if (need > static_cast<int>(cand.size())) {
      throw ValidationError("sampling infeasible: class " + std::to_string(c) + " needs " + std::to_string(need) +
                            " nodes but only " + std::to_string(cand.size()) + " are available");
    }
    // Partial Fisher-Yates.
    for (int i = 0; i < need; ++i) {
      std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i), cand.size() - 1);
      std::swap(cand[static_cast<std::size_t>(i)], cand[pick(gen)]);
    }
    std::sort(cand.begin(), cand.begin() + need);
    out.insert(out.end(), cand.begin(), cand.begin() + need);
  }
  return out;
}

Matrix init_features(const GraphDataset& dataset, int k, const SyntheticLabels& syn_labels, std::uint64_t seed) {
  if (syn_labels.num_classes() != dataset.num_classes) {
    throw ValidationError("synthetic labels have " + std::to_string(syn_labels.num_classes()) + " classes, dataset has " +
                          std::to_string(dataset.num_classes));
  }
  const TrainingView view = training_view(dataset);
  const Matrix propagated =
      k == 0 ? view.features : propagate(normalize_adjacency(view.adjacency), view.features, k).matrix;
  const NodeList chosen = sample_per_class(view.labels, view.mask, syn_labels.per_class_counts, seed);
  Matrix out(static_cast<Eigen::Index>(chosen.size()), propagated.cols());
  for (std::size_t i = 0; i < chosen.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = propagated.row(chosen[i]);
  return out;
}

ClassCorrelation build_class_correlation(const SparseMatrix& adjacency, std::span<const int> labels,
                                         int num_classes) {
  if (adjacency.nonZeros() == 0) throw ValidationError("degenerate structure: the graph has no edges");
  if (static_cast<Eigen::Index>(labels.size()) != adjacency.rows()) throw ShapeError("label count does not match graph");
  Matrix counts = Matrix::Zero(num_classes, num_classes);
  for (Eigen::Index i = 0; i < adjacency.rows(); ++i) {
    const int ci = labels[static_cast<std::size_t>(i)];
    for (SparseMatrix::InnerIterator it(adjacency, i); it; ++it) {
      counts(ci, labels[static_cast<std::size_t>(it.col())]) += it.value();
    }
  }
  ClassCorrelation corr{Matrix(num_classes, num_classes)};
  for (int c = 0; c < num_classes; ++c) {
    const double total = counts.row(c).sum();
    if (total > 0.0) {
      corr.matrix.row(c) = counts.row(c) / total;
    } else {
      corr.matrix.row(c).setConstant(1.0 / num_classes);
    }
  }
  return corr;
}

ClassCorrelation build_class_correlation(const GraphDataset& dataset) {
  const TrainingView view = training_view(dataset);
  return build_class_correlation(view.adjacency, view.labels, dataset.num_classes);
}

StructurePrior init_prior(const ClassCorrelation& corr, const SyntheticLabels& syn_labels) {
  const auto c = corr.matrix.rows();
  if (corr.matrix.cols() != c) throw ShapeError("class correlation must be square");
  const auto n = static_cast<Eigen::Index>(syn_labels.labels.size());
  for (int y : syn_labels.labels) {
    if (y < 0 || y >= c) throw ValidationError("synthetic label " + std::to_string(y) + " out of range");
  }
  StructurePrior prior{Matrix(n, n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      prior.matrix(i, j) = corr.matrix(syn_labels.labels[static_cast<std::size_t>(i)], syn_labels.labels[static_cast<std::size_t>(j)]);
    }
  }
  return prior;
}

}  // namespace gcsr
