#pragma once

#include "gcsr/condense_init.hpp"
#include "gcsr/graph.hpp"
#include "gcsr/models.hpp"
#include "gcsr/self_expressive.hpp"
#include "gcsr/trajectory.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace gcsr {

enum class StructureMode {
  SelfExpressive,  // A' solved from X', P and Z_h every iteration
  Identity,        // A' = I, the structure-free ablation
};

std::string_view to_string(StructureMode mode);
StructureMode parse_structure(std::string_view text);

struct CondenseConfig {
  double ratio = 0.1;
  int inner_steps = 20;      // N, student SGD steps on the condensed graph
  int expert_steps = 1;      // M, expert epochs spanned by a segment
  double inner_lr = 0.01;    // eta_1
  double feature_lr = 1e-3;  // eta_2, Adam on X'
  double alpha = 1.0;
  double beta = 1.0;
  double tau = 0.95;
  double gamma = 0.5;
  int k = 2;  // message-passing order for feature initialization
  int outer_iterations = 200;
  std::uint64_t seed = 0;
  StructureMode structure = StructureMode::SelfExpressive;
  double sparsify_threshold = 0.0;  // applied to the emitted A' only; 0 = off
  int t_min = 0;
  int t_max = -1;  // -1: up to the end of each trajectory

  void validate() const;
  std::map<std::string, std::string> to_map() const;
};

struct CondensedGraph {
  Matrix features;  // X'
  SyntheticAdjacency adjacency;
  SyntheticLabels labels;
  double ratio = 0.0;
  std::map<std::string, std::string> provenance;

  int num_nodes() const { return static_cast<int>(features.rows()); }
  void validate() const;
};

struct RegularizerState {
  Matrix prior;    // P
  Matrix history;  // Z_h
  double tau = 0.95;
  double gamma = 0.5;
};

// P <- tau P + (1 - tau) A';  Z_h <- gamma Z_h + (1 - gamma) A'
RegularizerState bootstrap_update(RegularizerState state, const SyntheticAdjacency& adj);

// |theta_hat - theta_end|² / |theta_end - theta_start|² over all layers.
double matching_loss(const ModelParams& theta_hat, const ModelParams& theta_end, const ModelParams& theta_start);

/// Everything recorded by the unrolled inner loop that the reverse pass needs.
struct UnrolledTape {
  Matrix norm_adj;  // Â' = normalize(A'), constant during the unroll
  int k = 2;
  Matrix inputs;  // Â'^k X'
  Labels labels;
  double lr = 0.0;
  std::vector<ModelParams> steps;  // W_0 .. W_n

  int num_steps() const { return static_cast<int>(steps.size()) - 1; }
};

// SGC student on (normalize(A'), X', Y'): n steps of plain SGD from theta_t.
// A' is treated as a constant.
std::pair<ModelParams, UnrolledTape> inner_train_unrolled(const ModelParams& theta_t, const CondensedGraph& condensed,
                                                          int k, int n, double inner_lr);

// Re-runs the recorded SGD steps from the tape's inputs.
ModelParams replay(const UnrolledTape& tape);

// dD/dX' by reverse-mode differentiation through all inner steps.
Matrix meta_gradient(const UnrolledTape& tape, const ModelParams& theta_end, const ModelParams& theta_start);

struct CondenseResult {
  CondensedGraph graph;
  std::vector<double> losses;  // D per outer iteration
};

using IterationCallback = std::function<void(int iteration, double loss)>;

CondenseResult condense(const GraphDataset& dataset, const TrajectoryBuffer& buffer, const CondenseConfig& cfg,
                        const IterationCallback& on_iteration = {});

// condensed_meta.json + X.bin + A.bin + Y.txt (+ loss.csv when losses are given).
void save_condensed(const CondensedGraph& graph, const std::filesystem::path& dir,
                    const std::vector<double>* losses = nullptr);
CondensedGraph load_condensed(const std::filesystem::path& dir);
std::vector<double> load_losses(const std::filesystem::path& dir);

}  // namespace gcsr
