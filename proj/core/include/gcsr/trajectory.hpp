#pragma once

#include "gcsr/graph.hpp"
#include "gcsr/models.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace gcsr {

struct Trajectory {
  std::uint64_t seed = 0;
  std::vector<ModelParams> checkpoints;  // theta_0 .. theta_T, one per epoch
};

/// Expert runs on the real training graph. Immutable once generated.
struct TrajectoryBuffer {
  Arch arch = Arch::SGC;
  TrainConfig train;
  int hidden = kDefaultHidden;
  int k = 2;
  std::string fingerprint;
  std::vector<Trajectory> experts;

  void validate() const;
  // Throws ValidationError if the buffer was produced from another dataset.
  void check_dataset(const GraphDataset& dataset) const;
  int shortest() const;
};

// Expert i trains from init_params(seed = cfg.seed + i).
TrajectoryBuffer generate_expert_trajectories(const GraphDataset& dataset, Arch arch, const TrainConfig& cfg,
                                              int num_experts, int hidden = kDefaultHidden, int k = 2);

struct SegmentWindow {
  int t_min = 0;
  std::optional<int> t_max;
};

struct Segment {
  const ModelParams& start;
  const ModelParams& end;
  int t;
  int expert;
};

// Uniform over all (expert, t) with t + m inside the trajectory and t in the window.
Segment sample_segment(const TrajectoryBuffer& buffer, int m, std::mt19937_64& rng, const SegmentWindow& window = {});

void save_buffer(const TrajectoryBuffer& buffer, const std::filesystem::path& dir);
TrajectoryBuffer load_buffer(const std::filesystem::path& dir);

}  // namespace gcsr
