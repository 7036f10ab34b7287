#pragma once

#include "gcsr/graph.hpp"

#include <cstdint>
#include <vector>

namespace gcsr {

/// Stochastic block model with Gaussian class-mean features.
struct SbmSpec {
  std::vector<int> block_sizes{100, 100, 100};
  double p_in = 0.3;
  double p_out = 0.02;
  int num_features = 16;
  double signal = 1.0;  // norm of each class mean
  double noise = 1.0;   // per-coordinate standard deviation
  double train_fraction = 0.5;
  double val_fraction = 0.2;
  Mode mode = Mode::Transductive;
  std::uint64_t seed = 0;
};

// Splits are stratified by class. Deterministic in spec.seed.
GraphDataset make_sbm(const SbmSpec& spec);

}  // namespace gcsr
