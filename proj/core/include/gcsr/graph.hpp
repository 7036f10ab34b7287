#pragma once

#include "gcsr/types.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace gcsr {

enum class Mode { Transductive, Inductive };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view text);

using Edge = std::pair<int, int>;

/// Node-classification graph held in memory.
///
/// The adjacency is stored symmetric, binary and without self-loops; splits
/// are sorted, pairwise disjoint node index lists. Instances are immutable
/// once validated and can be shared freely between readers.
struct GraphDataset {
  Matrix features;
  Labels labels;
  SparseMatrix adjacency;
  int num_classes = 0;
  NodeList train;
  NodeList val;
  NodeList test;
  Mode mode = Mode::Transductive;

  int num_nodes() const { return static_cast<int>(labels.size()); }
  int num_features() const { return static_cast<int>(features.cols()); }
  Labels train_labels() const;

  // Throws ValidationError naming the first broken invariant.
  void validate() const;
};

struct Splits {
  NodeList train;
  NodeList val;
  NodeList test;
};

// Builds and validates a dataset from an undirected edge list. Reverse edges
// are added, duplicates merged and self-loops dropped.
GraphDataset make_dataset(std::span<const Edge> edges, Matrix features, Labels labels,
                          int num_classes, Splits splits, Mode mode = Mode::Transductive);

SparseMatrix adjacency_from_edges(int num_nodes, std::span<const Edge> edges);

GraphDataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const GraphDataset& dataset, const std::filesystem::path& dir);

// SHA-256 (hex) over a canonical serialization of the dataset contents.
std::string fingerprint(const GraphDataset& dataset);

/// D^{-1/2} (A [+ I]) D^{-1/2}, kept sparse for original graphs and dense for
/// condensed ones.
class NormalizedAdjacency {
 public:
  NormalizedAdjacency() = default;
  explicit NormalizedAdjacency(SparseMatrix matrix, int order = 0);
  explicit NormalizedAdjacency(Matrix matrix, int order = 0);

  bool is_sparse() const { return std::holds_alternative<SparseMatrix>(matrix_); }
  Eigen::Index rows() const;
  int order() const { return order_; }

  const SparseMatrix& sparse() const { return std::get<SparseMatrix>(matrix_); }
  const Matrix& dense() const { return std::get<Matrix>(matrix_); }
  Matrix to_dense() const;

  // Returns this * x.
  Matrix apply(const Matrix& x) const;

 private:
  std::variant<SparseMatrix, Matrix> matrix_;
  int order_ = 0;
};

NormalizedAdjacency normalize_adjacency(const SparseMatrix& a, bool add_self_loops = true);
NormalizedAdjacency normalize_adjacency(const Matrix& a, bool add_self_loops = true);

struct PropagatedFeatures {
  Matrix matrix;
  int k = 0;
};

// Â^k X as k successive products; Â^k itself is never formed.
PropagatedFeatures propagate(const NormalizedAdjacency& norm_adj, const Matrix& x, int k);

// Per-class empirical frequencies, summing to one.
std::vector<double> class_distribution(std::span<const int> labels, int num_classes);

SparseMatrix induced_subgraph(const SparseMatrix& a, std::span<const int> nodes);

/// The part of a dataset a model may train on.
///
/// Transductive: the whole graph with the training mask. Inductive: the
/// subgraph induced by the training nodes, every node of which is trainable.
struct TrainingView {
  SparseMatrix adjacency;
  Matrix features;
  Labels labels;
  NodeList mask;
  NodeList origin;  // view node -> dataset node
};

TrainingView training_view(const GraphDataset& dataset);

}  // namespace gcsr
