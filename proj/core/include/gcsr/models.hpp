#pragma once

#include "gcsr/graph.hpp"
#include "gcsr/types.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace gcsr {

enum class Arch { SGC, GCN, MLP };
enum class Optimizer { SGD, Adam };

std::string_view to_string(Arch arch);
Arch parse_arch(std::string_view text);
std::string_view to_string(Optimizer opt);
Optimizer parse_optimizer(std::string_view text);

inline constexpr int kDefaultHidden = 256;

/// Two-layer weights W1 (d x h) and W2 (h x C). SGC has no nonlinearity
/// between them; GCN and MLP apply ReLU.
struct ModelParams {
  Arch arch = Arch::SGC;
  std::vector<Matrix> layers;

  Eigen::Index num_parameters() const;
  int num_classes() const { return static_cast<int>(layers.back().cols()); }
  bool same_shape(const ModelParams& other) const;
  void check_chain() const;

  Vector flatten() const;
  // Copy of this with every entry replaced from a flat vector.
  ModelParams unflatten(const Vector& flat) const;

  ModelParams& operator+=(const ModelParams& other);
  ModelParams& operator*=(double s);
};

ModelParams zeros_like(const ModelParams& params);
double squared_distance(const ModelParams& a, const ModelParams& b);

// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] per layer.
ModelParams init_params(Arch arch, int in_features, int hidden, int num_classes, std::uint64_t seed);

struct TrainConfig {
  double learning_rate = 0.01;
  double weight_decay = 5e-4;
  int epochs = 600;
  Optimizer optimizer = Optimizer::Adam;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Graph input prepared for one architecture: SGC keeps Â^k X, GCN keeps
/// Â X alongside Â, MLP keeps X.
class ModelInput {
 public:
  ModelInput(Arch arch, NormalizedAdjacency norm_adj, const Matrix& x, int k = 2);
  // SGC input with the propagation already applied.
  static ModelInput sgc_from_propagated(Matrix propagated);

  Arch arch() const { return arch_; }
  Eigen::Index num_nodes() const { return input_.rows(); }
  Eigen::Index num_features() const { return input_.cols(); }
  const Matrix& input() const { return input_; }
  const NormalizedAdjacency& adjacency() const { return adj_; }

 private:
  ModelInput() = default;

  Arch arch_ = Arch::SGC;
  NormalizedAdjacency adj_;
  Matrix input_;
};

Matrix forward(const ModelParams& params, const ModelInput& input);
// SGC: (Â^k X) W1 W2; GCN: Â ReLU(Â X W1) W2; MLP: ReLU(X W1) W2.
Matrix forward(const ModelParams& params, const NormalizedAdjacency& norm_adj, const Matrix& x, int k = 2);

struct LossGrad {
  double loss = 0.0;
  ModelParams grad;
};

// Mean softmax cross-entropy over `mask` plus (weight_decay / 2) * |theta|^2.
LossGrad loss_and_grad(const ModelParams& params, const ModelInput& input, std::span<const int> labels,
                       std::span<const int> mask, double weight_decay = 0.0);

// Cross-entropy gradient with respect to logits, averaged over the masked
// rows; unmasked rows are zero. Also returns the loss.
double softmax_cross_entropy(const Matrix& logits, std::span<const int> labels, std::span<const int> mask,
                             Matrix* dlogits);

struct TrainResult {
  ModelParams final_params;
  std::vector<ModelParams> checkpoints;  // epochs + 1 entries, [0] = initial
  std::vector<double> losses;            // loss evaluated before each update
};

TrainResult train(const ModelInput& input, std::span<const int> labels, std::span<const int> mask,
                  const ModelParams& params0, const TrainConfig& cfg, bool keep_checkpoints = true);

// Row-wise argmax with ties going to the lowest class index.
std::vector<int> predict(const Matrix& logits);
double accuracy(const Matrix& logits, std::span<const int> labels, std::span<const int> mask);
double evaluate(const ModelParams& params, const ModelInput& input, std::span<const int> labels,
                std::span<const int> mask);

/// Adam with PyTorch defaults, also used for the synthetic features.
class AdamState {
 public:
  explicit AdamState(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(Matrix& param, const Matrix& grad, std::size_t slot = 0);

 private:
  double lr_, beta1_, beta2_, eps_;
  std::vector<Matrix> m_, v_;
  std::vector<long> t_;
};

struct Checkpoint {
  ModelParams params;
  int epoch = 0;
  std::uint64_t seed = 0;
};

// One JSON header line {arch, shapes, epoch, seed} followed by row-major
// little-endian float64 weights, layer by layer.
void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in, const std::string& context = "checkpoint");
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace gcsr
