#pragma once

#include "gcsr/graph.hpp"
#include "gcsr/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace gcsr {

struct SyntheticLabels {
  Labels labels;                      // grouped by class, in class order
  std::vector<int> per_class_counts;  // sums to labels.size()

  int num_classes() const { return static_cast<int>(per_class_counts.size()); }
};

/// Largest-remainder apportionment of `target` nodes to the class frequencies
/// of `labels`. Remainder ties go to the lower class index; any class left at
/// zero takes one node from the currently largest class.
SyntheticLabels allocate_labels(std::span<const int> labels, int num_classes, int target);

// round(ratio * nodes in the training view), at least one per class.
int condensed_size(const GraphDataset& dataset, double ratio);

// Draws per_class_counts[c] distinct nodes of class c from `pool` for every c.
// The result is grouped by class and ascending within a class.
NodeList sample_per_class(std::span<const int> labels, std::span<const int> pool,
                          std::span<const int> per_class_counts, std::uint64_t seed);

/// Message-passing initialization: rows of Â^k X sampled from training nodes
/// of matching class. k = 0 samples raw features.
Matrix init_features(const GraphDataset& dataset, int k, const SyntheticLabels& syn_labels, std::uint64_t seed);

struct ClassCorrelation {
  Matrix matrix;  // C x C, row c = class distribution of neighbours of class-c nodes
};

ClassCorrelation build_class_correlation(const SparseMatrix& adjacency, std::span<const int> labels,
                                         int num_classes);
// Uses the training view (whole graph when transductive).
ClassCorrelation build_class_correlation(const GraphDataset& dataset);

struct StructurePrior {
  Matrix matrix;  // N' x N', P[i][j] = corr[Y'_i][Y'_j]
};

StructurePrior init_prior(const ClassCorrelation& corr, const SyntheticLabels& syn_labels);

}  // namespace gcsr
