#pragma once

#include "gcsr/engine.hpp"
#include "gcsr/graph.hpp"
#include "gcsr/models.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace gcsr {

struct AccuracyReport {
  std::vector<double> runs;  // accuracy of every converged run
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  Arch arch = Arch::GCN;
  int epochs = 0;
  int repeats = 0;
  std::vector<std::string> warnings;  // one per excluded (diverged) run

  static AccuracyReport from_runs(std::vector<double> runs, Arch arch, int epochs, int repeats);
};

struct TestStageConfig {
  Arch arch = Arch::GCN;
  int repeats = 10;
  int epochs = 600;
  double learning_rate = 0.01;
  double weight_decay = 5e-4;
  int hidden = kDefaultHidden;
  int k = 2;  // SGC propagation order
  std::uint64_t seed = 0;
};

/// Trains `cfg.arch` on (normalize(A'), X', Y') and scores it on the original
/// test nodes with the original graph. Run r is seeded with cfg.seed + r.
AccuracyReport test_stage(const CondensedGraph& condensed, const GraphDataset& dataset, const TestStageConfig& cfg);

struct CcnsMatrix {
  Matrix matrix;  // C x C
  int isolated_skipped = 0;
};

/// Cross-class neighbourhood similarity: mean cosine similarity between the
/// weighted neighbour-label distributions of node pairs (u in c, v in c',
/// u != v). Rows with zero weight are skipped. A class with a single node
/// scores s(c, c) = 1.
CcnsMatrix ccns(const Matrix& adjacency, std::span<const int> labels, int num_classes);
CcnsMatrix ccns(const SparseMatrix& adjacency, std::span<const int> labels, int num_classes);

// Mean silhouette coefficient with Euclidean distance. Points in a singleton
// cluster score 0, as do points with a = b = 0.
double silhouette(const Matrix& features, std::span<const int> labels);

// Stratified uniform sample of training nodes with their induced subgraph.
CondensedGraph random_coreset(const GraphDataset& dataset, double ratio, std::uint64_t seed);

// Every training node with the induced training subgraph, as a condensed graph.
CondensedGraph training_subgraph(const GraphDataset& dataset);

std::string metrics_json(const AccuracyReport* report, const CcnsMatrix* ccns_matrix, const double* silhouette_score,
                         const std::map<std::string, std::string>& config);
void write_ccns_csv(const std::filesystem::path& path, const CcnsMatrix& m);
void write_features_csv(const std::filesystem::path& path, const Matrix& features, std::span<const int> labels);

}  // namespace gcsr
