#include "gcsr/graph.hpp"

#include "gcsr/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gcsr {

std::string_view to_string(Mode mode) {
  return mode == Mode::Transductive ? "transductive" : "inductive";
}

Mode parse_mode(std::string_view text) {
  if (text == "transductive") return Mode::Transductive;
  if (text == "inductive") return Mode::Inductive;
  throw ValidationError("mode must be 'transductive' or 'inductive', got '" + std::string(text) + "'");
}

Labels GraphDataset::train_labels() const {
  Labels out;
  out.reserve(train.size());
  for (int i : train) out.push_back(labels[static_cast<std::size_t>(i)]);
  return out;
}

namespace {

void check_split(const NodeList& split, const char* name, int n) {
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (split[i] < 0 || split[i] >= n) {
      throw ValidationError(std::string("mask '") + name + "' contains out-of-range node " +
                            std::to_string(split[i]));
    }
    if (i > 0 && split[i] <= split[i - 1]) {
      throw ValidationError(std::string("mask '") + name + "' must be sorted without duplicates");
    }
  }
}

}  // namespace

void GraphDataset::validate() const {
  const int n = num_nodes();
  if (n <= 0) throw ValidationError("dataset has no nodes");
  if (num_classes <= 0) throw ValidationError("num_classes must be positive");
  if (features.rows() != n) {
    throw ShapeError("features have " + std::to_string(features.rows()) + " rows, expected " +
                     std::to_string(n));
  }
  if (adjacency.rows() != n || adjacency.cols() != n) {
    throw ShapeError("adjacency must be " + std::to_string(n) + "x" + std::to_string(n));
  }
  for (int i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= num_classes) {
      throw ValidationError("label " + std::to_string(y) + " of node " + std::to_string(i) +
                            " is outside [0, " + std::to_string(num_classes) + ")");
    }
  }
  for (int i = 0; i < n; ++i) {
    for (SparseMatrix::InnerIterator it(adjacency, i); it; ++it) {
      if (it.col() == i) throw ValidationError("adjacency has a self-loop at node " + std::to_string(i));
      if (it.value() != 1.0) throw ValidationError("adjacency must be binary");
      if (adjacency.coeff(it.col(), i) != 1.0) {
        throw ValidationError("adjacency is not symmetric at (" + std::to_string(i) + ", " +
                              std::to_string(it.col()) + ")");
      }
    }
  }
  check_split(train, "train", n);
  check_split(val, "val", n);
  check_split(test, "test", n);
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (const NodeList* split : {&train, &val, &test}) {
    for (int i : *split) {
      if (seen[static_cast<std::size_t>(i)]) {
        throw ValidationError("masks are not disjoint: node " + std::to_string(i) +
                              " appears in more than one split");
      }
      seen[static_cast<std::size_t>(i)] = 1;
    }
  }
  std::vector<int> train_count(static_cast<std::size_t>(num_classes), 0);
  for (int i : train) ++train_count[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
  for (int c = 0; c < num_classes; ++c) {
    if (train_count[static_cast<std::size_t>(c)] == 0) {
      throw ValidationError("class " + std::to_string(c) + " has no training node");
    }
  }
}

SparseMatrix adjacency_from_edges(int num_nodes, std::span<const Edge> edges) {
  std::vector<Edge> undirected;
  undirected.reserve(edges.size());
  for (auto [u, v] : edges) {
    if (u < 0 || v < 0 || u >= num_nodes || v >= num_nodes) {
      throw ValidationError("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                            ") references a node outside [0, " + std::to_string(num_nodes) + ")");
    }
    if (u == v) continue;
    undirected.emplace_back(std::min(u, v), std::max(u, v));
  }
  std::sort(undirected.begin(), undirected.end());
  undirected.erase(std::unique(undirected.begin(), undirected.end()), undirected.end());

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(undirected.size() * 2);
  for (auto [u, v] : undirected) {
    triplets.emplace_back(u, v, 1.0);
    triplets.emplace_back(v, u, 1.0);
  }
  SparseMatrix a(num_nodes, num_nodes);
  a.setFromTriplets(triplets.begin(), triplets.end());
  a.makeCompressed();
  return a;
}

GraphDataset make_dataset(std::span<const Edge> edges, Matrix features, Labels labels,
                          int num_classes, Splits splits, Mode mode) {
  GraphDataset ds;
  const int n = static_cast<int>(labels.size());
  ds.adjacency = adjacency_from_edges(n, edges);
  ds.features = std::move(features);
  ds.labels = std::move(labels);
  ds.num_classes = num_classes;
  ds.train = std::move(splits.train);
  ds.val = std::move(splits.val);
  ds.test = std::move(splits.test);
  ds.mode = mode;
  ds.validate();
  return ds;
}

NormalizedAdjacency::NormalizedAdjacency(SparseMatrix matrix, int order)
    : matrix_(std::move(matrix)), order_(order) {}

NormalizedAdjacency::NormalizedAdjacency(Matrix matrix, int order)
    : matrix_(std::move(matrix)), order_(order) {}

Eigen::Index NormalizedAdjacency::rows() const {
  return std::visit([](const auto& m) { return m.rows(); }, matrix_);
}

Matrix NormalizedAdjacency::to_dense() const {
  if (is_sparse()) return Matrix(sparse());
  return dense();
}

Matrix NormalizedAdjacency::apply(const Matrix& x) const {
  if (rows() != x.rows()) {
    throw ShapeError("normalized adjacency has " + std::to_string(rows()) +
                     " columns but features have " + std::to_string(x.rows()) + " rows");
  }
  if (is_sparse()) return Matrix(sparse() * x);
  return dense() * x;
}

namespace {

void check_degrees(const Vector& deg, bool add_self_loops) {
  for (Eigen::Index i = 0; i < deg.size(); ++i) {
    if (!(deg(i) > 0.0)) {
      throw ValidationError("degenerate degree at row " + std::to_string(i) +
                            (add_self_loops ? "" : " (self-loops disabled)"));
    }
  }
}

}  // namespace

NormalizedAdjacency normalize_adjacency(const SparseMatrix& a, bool add_self_loops) {
  if (a.rows() != a.cols()) throw ShapeError("adjacency must be square");
  const Eigen::Index n = a.rows();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(a.nonZeros() + n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (SparseMatrix::InnerIterator it(a, i); it; ++it) {
      if (it.value() < 0.0) throw ValidationError("adjacency has a negative entry");
      triplets.emplace_back(static_cast<int>(i), static_cast<int>(it.col()), it.value());
    }
    if (add_self_loops) triplets.emplace_back(static_cast<int>(i), static_cast<int>(i), 1.0);
  }
  SparseMatrix tilde(n, n);
  tilde.setFromTriplets(triplets.begin(), triplets.end());
  tilde.makeCompressed();

  Vector deg = Vector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (SparseMatrix::InnerIterator it(tilde, i); it; ++it) deg(i) += it.value();
  }
  check_degrees(deg, add_self_loops);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (SparseMatrix::InnerIterator it(tilde, i); it; ++it) {
      it.valueRef() = it.value() / std::sqrt(deg(i) * deg(it.col()));
    }
  }
  return NormalizedAdjacency(std::move(tilde));
}

NormalizedAdjacency normalize_adjacency(const Matrix& a, bool add_self_loops) {
  if (a.rows() != a.cols()) throw ShapeError("adjacency must be square");
  if (a.size() > 0 && a.minCoeff() < 0.0) throw ValidationError("adjacency has a negative entry");
  const double scale = std::max(1.0, a.size() > 0 ? a.cwiseAbs().maxCoeff() : 0.0);
  if (a.size() > 0 && (a - a.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw ValidationError("adjacency is not symmetric");
  }
  Matrix tilde = a;
  if (add_self_loops) tilde.diagonal().array() += 1.0;
  const Vector deg = tilde.rowwise().sum();
  check_degrees(deg, add_self_loops);
  const Eigen::Index n = a.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      tilde(i, j) = tilde(i, j) / std::sqrt(deg(i) * deg(j));
    }
  }
  return NormalizedAdjacency(std::move(tilde));
}

PropagatedFeatures propagate(const NormalizedAdjacency& norm_adj, const Matrix& x, int k) {
  if (k < 0) throw ValidationError("propagation order k must be nonnegative");
  if (norm_adj.rows() != x.rows()) {
    throw ShapeError("cannot propagate: adjacency is " + std::to_string(norm_adj.rows()) +
                     " wide, features have " + std::to_string(x.rows()) + " rows");
  }
  PropagatedFeatures out{x, k};
  for (int step = 0; step < k; ++step) out.matrix = norm_adj.apply(out.matrix);
  return out;
}

std::vector<double> class_distribution(std::span<const int> labels, int num_classes) {
  if (labels.empty()) throw ValidationError("class_distribution: empty label vector");
  if (num_classes <= 0) throw ValidationError("class_distribution: num_classes must be positive");
  std::vector<double> freq(static_cast<std::size_t>(num_classes), 0.0);
  for (int y : labels) {
    if (y < 0 || y >= num_classes) {
      throw ValidationError("class_distribution: label " + std::to_string(y) + " out of range");
    }
    freq[static_cast<std::size_t>(y)] += 1.0;
  }
  for (double& f : freq) f /= static_cast<double>(labels.size());
  return freq;
}

SparseMatrix induced_subgraph(const SparseMatrix& a, std::span<const int> nodes) {
  std::vector<int> local(static_cast<std::size_t>(a.rows()), -1);
  for (std::size_t i = 0; i < nodes.size(); ++i) local[static_cast<std::size_t>(nodes[i])] = static_cast<int>(i);
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (SparseMatrix::InnerIterator it(a, nodes[i]); it; ++it) {
      const int j = local[static_cast<std::size_t>(it.col())];
      if (j >= 0) triplets.emplace_back(static_cast<int>(i), j, it.value());
    }
  }
  const auto m = static_cast<Eigen::Index>(nodes.size());
  SparseMatrix sub(m, m);
  sub.setFromTriplets(triplets.begin(), triplets.end());
  sub.makeCompressed();
  return sub;
}

TrainingView training_view(const GraphDataset& dataset) {
  TrainingView view;
  if (dataset.mode == Mode::Transductive) {
    view.adjacency = dataset.adjacency;
    view.features = dataset.features;
    view.labels = dataset.labels;
    view.mask = dataset.train;
    view.origin.resize(static_cast<std::size_t>(dataset.num_nodes()));
    for (int i = 0; i < dataset.num_nodes(); ++i) view.origin[static_cast<std::size_t>(i)] = i;
    return view;
  }
  const auto& nodes = dataset.train;
  view.adjacency = induced_subgraph(dataset.adjacency, nodes);
  view.features.resize(static_cast<Eigen::Index>(nodes.size()), dataset.features.cols());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    view.features.row(static_cast<Eigen::Index>(i)) = dataset.features.row(nodes[i]);
    view.labels.push_back(dataset.labels[static_cast<std::size_t>(nodes[i])]);
    view.mask.push_back(static_cast<int>(i));
  }
  view.origin = nodes;
  return view;
}

}  // namespace gcsr
