#include "gcsr/models.hpp"

#include "gcsr/error.hpp"

#include <cmath>
#include <random>
#include <string>

namespace gcsr {

std::string_view to_string(Arch arch) {
  switch (arch) {
    case Arch::SGC: return "sgc";
    case Arch::GCN: return "gcn";
    case Arch::MLP: return "mlp";
  }
  return "?";
}

Arch parse_arch(std::string_view text) {
  if (text == "sgc" || text == "SGC") return Arch::SGC;
  if (text == "gcn" || text == "GCN") return Arch::GCN;
  if (text == "mlp" || text == "MLP") return Arch::MLP;
  throw ValidationError("arch must be one of sgc, gcn, mlp; got '" + std::string(text) + "'");
}

std::string_view to_string(Optimizer opt) { return opt == Optimizer::SGD ? "sgd" : "adam"; }

Optimizer parse_optimizer(std::string_view text) {
  if (text == "sgd" || text == "SGD") return Optimizer::SGD;
  if (text == "adam" || text == "Adam") return Optimizer::Adam;
  throw ValidationError("optimizer must be sgd or adam; got '" + std::string(text) + "'");
}

Eigen::Index ModelParams::num_parameters() const {
  Eigen::Index n = 0;
  for (const auto& w : layers) n += w.size();
  return n;
}

bool ModelParams::same_shape(const ModelParams& other) const {
  if (arch != other.arch || layers.size() != other.layers.size()) return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].rows() != other.layers[i].rows() || layers[i].cols() != other.layers[i].cols()) return false;
  }
  return true;
}

void ModelParams::check_chain() const {
  if (layers.size() != 2) throw ShapeError("model expects exactly two weight matrices");
  if (layers[0].cols() != layers[1].rows()) {
    throw ShapeError("layer shapes do not chain: " + std::to_string(layers[0].cols()) + " vs " +
                     std::to_string(layers[1].rows()));
  }
}

Vector ModelParams::flatten() const {
  Vector flat(num_parameters());
  Eigen::Index pos = 0;
  for (const auto& w : layers) {
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) flat(pos++) = w(i, j);
    }
  }
  return flat;
}

ModelParams ModelParams::unflatten(const Vector& flat) const {
  if (flat.size() != num_parameters()) {
    throw ShapeError("flat parameter vector has " + std::to_string(flat.size()) + " entries, expected " +
                     std::to_string(num_parameters()));
  }
  ModelParams out = *this;
  Eigen::Index pos = 0;
  for (auto& w : out.layers) {
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = flat(pos++);
    }
  }
  return out;
}

ModelParams& ModelParams::operator+=(const ModelParams& other) {
  if (!same_shape(other)) throw ShapeError("parameter sets have different shapes");
  for (std::size_t i = 0; i < layers.size(); ++i) layers[i] += other.layers[i];
  return *this;
}

ModelParams& ModelParams::operator*=(double s) {
  for (auto& w : layers) w *= s;
  return *this;
}

ModelParams zeros_like(const ModelParams& params) {
  ModelParams out = params;
  for (auto& w : out.layers) w.setZero();
  return out;
}

double squared_distance(const ModelParams& a, const ModelParams& b) {
  if (!a.same_shape(b)) throw ShapeError("parameter sets have different shapes");
  double s = 0.0;
  for (std::size_t i = 0; i < a.layers.size(); ++i) s += (a.layers[i] - b.layers[i]).squaredNorm();
  return s;
}

ModelParams init_params(Arch arch, int in_features, int hidden, int num_classes, std::uint64_t seed) {
  if (in_features <= 0 || hidden <= 0 || num_classes <= 0) {
    throw ValidationError("model dimensions must be positive");
  }
  std::mt19937_64 gen(seed);
  ModelParams p;
  p.arch = arch;
  const int dims[3] = {in_features, hidden, num_classes};
  for (int l = 0; l < 2; ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims[l]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix w(dims[l], dims[l + 1]);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = dist(gen);
    }
    p.layers.push_back(std::move(w));
  }
  return p;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be > 0");
  if (!(weight_decay >= 0.0)) throw ValidationError("weight_decay must be >= 0");
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
}

ModelInput::ModelInput(Arch arch, NormalizedAdjacency norm_adj, const Matrix& x, int k) : arch_(arch) {
  switch (arch) {
    case Arch::SGC:
      input_ = propagate(norm_adj, x, k).matrix;
      break;
    case Arch::GCN:
      input_ = norm_adj.apply(x);
      adj_ = std::move(norm_adj);
      break;
    case Arch::MLP:
      input_ = x;
      break;
  }
}

ModelInput ModelInput::sgc_from_propagated(Matrix propagated) {
  ModelInput in;
  in.arch_ = Arch::SGC;
  in.input_ = std::move(propagated);
  return in;
}

namespace {

void check_compatible(const ModelParams& params, const ModelInput& input) {
  params.check_chain();
  if (params.arch != input.arch()) {
    throw ValidationError("parameters are for " + std::string(to_string(params.arch)) + " but input is for " +
                          std::string(to_string(input.arch())));
  }
  if (params.layers[0].rows() != input.num_features()) {
    throw ShapeError("first layer expects " + std::to_string(params.layers[0].rows()) + " features, input has " +
                     std::to_string(input.num_features()));
  }
}

Matrix relu(const Matrix& m) { return m.cwiseMax(0.0); }

Matrix gather_rows(const Matrix& m, std::span<const int> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

void check_mask(std::span<const int> labels, std::span<const int> mask, Eigen::Index n) {
  if (mask.empty()) throw ValidationError("empty mask: at least one node must be selected");
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    throw ShapeError("label vector has " + std::to_string(labels.size()) + " entries for " + std::to_string(n) +
                     " nodes");
  }
  for (int i : mask) {
    if (i < 0 || i >= n) throw ValidationError("mask index " + std::to_string(i) + " out of range");
  }
}

}  // namespace

Matrix forward(const ModelParams& params, const ModelInput& input) {
  check_compatible(params, input);
  const Matrix& w1 = params.layers[0];
  const Matrix& w2 = params.layers[1];
  switch (input.arch()) {
    case Arch::SGC: {
      const Matrix h = input.input() * w1;
      return h * w2;
    }
    case Arch::GCN: {
      const Matrix h = relu(input.input() * w1);
      return input.adjacency().apply(h * w2);
    }
    case Arch::MLP: {
      const Matrix h = relu(input.input() * w1);
      return h * w2;
    }
  }
  return {};
}

Matrix forward(const ModelParams& params, const NormalizedAdjacency& norm_adj, const Matrix& x, int k) {
  return forward(params, ModelInput(params.arch, norm_adj, x, k));
}

double softmax_cross_entropy(const Matrix& logits, std::span<const int> labels, std::span<const int> mask,
                             Matrix* dlogits) {
  check_mask(labels, mask, logits.rows());
  const double inv_m = 1.0 / static_cast<double>(mask.size());
  if (dlogits) dlogits->setZero(logits.rows(), logits.cols());
  double loss = 0.0;
  for (int i : mask) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= logits.cols()) throw ValidationError("label " + std::to_string(y) + " out of range");
    const auto row = logits.row(i);
    const double mx = row.maxCoeff();
    const Eigen::RowVectorXd ex = (row.array() - mx).exp().matrix();
    const double sum = ex.sum();
    loss += (std::log(sum) + mx - row(y)) * inv_m;
    if (dlogits) {
      dlogits->row(i) = ex * (inv_m / sum);
      (*dlogits)(i, y) -= inv_m;
    }
  }
  return loss;
}

LossGrad loss_and_grad(const ModelParams& params, const ModelInput& input, std::span<const int> labels,
                       std::span<const int> mask, double weight_decay) {
  check_compatible(params, input);
  check_mask(labels, mask, input.num_nodes());
  const Matrix& w1 = params.layers[0];
  const Matrix& w2 = params.layers[1];
  LossGrad out;
  out.grad = zeros_like(params);
  Matrix& g1 = out.grad.layers[0];
  Matrix& g2 = out.grad.layers[1];

  switch (input.arch()) {
    case Arch::SGC:
    case Arch::MLP: {
      // Row-local models: only the masked rows contribute.
      const Matrix s = gather_rows(input.input(), mask);
      Labels local_labels;
      NodeList local_mask;
      for (std::size_t i = 0; i < mask.size(); ++i) {
        local_labels.push_back(labels[static_cast<std::size_t>(mask[i])]);
        local_mask.push_back(static_cast<int>(i));
      }
      const Matrix pre = s * w1;
      const Matrix h = input.arch() == Arch::MLP ? relu(pre) : pre;
      Matrix dz;
      out.loss = softmax_cross_entropy(h * w2, local_labels, local_mask, &dz);
      g2 = h.transpose() * dz;
      Matrix dh = dz * w2.transpose();
      if (input.arch() == Arch::MLP) dh = dh.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
      g1 = s.transpose() * dh;
      break;
    }
    case Arch::GCN: {
      const Matrix& ax = input.input();
      const Matrix pre = ax * w1;
      const Matrix h = relu(pre);
      Matrix dz;
      out.loss = softmax_cross_entropy(input.adjacency().apply(h * w2), labels, mask, &dz);
      // Â is symmetric, so Âᵀ dZ = Â dZ.
      const Matrix adz = input.adjacency().apply(dz);
      g2 = h.transpose() * adz;
      const Matrix dh = (adz * w2.transpose()).cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
      g1 = ax.transpose() * dh;
      break;
    }
  }

  if (weight_decay > 0.0) {
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
      out.loss += 0.5 * weight_decay * params.layers[l].squaredNorm();
      out.grad.layers[l] += weight_decay * params.layers[l];
    }
  }
  return out;
}

void AdamState::step(Matrix& param, const Matrix& grad, std::size_t slot) {
  if (m_.size() <= slot) {
    m_.resize(slot + 1);
    v_.resize(slot + 1);
    t_.resize(slot + 1, 0);
  }
  if (m_[slot].size() == 0) {
    m_[slot] = Matrix::Zero(param.rows(), param.cols());
    v_[slot] = Matrix::Zero(param.rows(), param.cols());
  }
  const long t = ++t_[slot];
  m_[slot] = beta1_ * m_[slot] + (1.0 - beta1_) * grad;
  v_[slot] = beta2_ * v_[slot] + (1.0 - beta2_) * grad.cwiseProduct(grad);
  const double bias1 = 1.0 - std::pow(beta1_, static_cast<double>(t));
  const double bias2 = 1.0 - std::pow(beta2_, static_cast<double>(t));
  const double step = lr_ / bias1;
  const double sqrt_bias2 = std::sqrt(bias2);
  param.array() -= step * m_[slot].array() / (v_[slot].array().sqrt() / sqrt_bias2 + eps_);
}

namespace {

bool all_finite(const ModelParams& p) {
  for (const auto& w : p.layers) {
    if (!w.allFinite()) return false;
  }
  return true;
}

}  // namespace

TrainResult train(const ModelInput& input, std::span<const int> labels, std::span<const int> mask,
                  const ModelParams& params0, const TrainConfig& cfg, bool keep_checkpoints) {
  cfg.validate();
  TrainResult result;
  ModelParams params = params0;
  if (keep_checkpoints) {
    result.checkpoints.reserve(static_cast<std::size_t>(cfg.epochs) + 1);
    result.checkpoints.push_back(params);
  }
  result.losses.reserve(static_cast<std::size_t>(cfg.epochs));
  AdamState adam(cfg.learning_rate);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    LossGrad lg = loss_and_grad(params, input, labels, mask, cfg.weight_decay);
    if (!std::isfinite(lg.loss) || !all_finite(lg.grad)) {
      throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + " (non-finite loss)", epoch);
    }
    result.losses.push_back(lg.loss);
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
      if (cfg.optimizer == Optimizer::SGD) {
        params.layers[l] -= cfg.learning_rate * lg.grad.layers[l];
      } else {
        adam.step(params.layers[l], lg.grad.layers[l], l);
      }
    }
    if (!all_finite(params)) {
      throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + " (non-finite weights)", epoch);
    }
    if (keep_checkpoints) result.checkpoints.push_back(params);
  }
  result.final_params = std::move(params);
  return result;
}

std::vector<int> predict(const Matrix& logits) {
  std::vector<int> out(static_cast<std::size_t>(logits.rows()), 0);
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    int best = 0;
    for (Eigen::Index c = 1; c < logits.cols(); ++c) {
      if (logits(i, c) > logits(i, best)) best = static_cast<int>(c);
    }
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

double accuracy(const Matrix& logits, std::span<const int> labels, std::span<const int> mask) {
  check_mask(labels, mask, logits.rows());
  const auto pred = predict(logits);
  int correct = 0;
  for (int i : mask) {
    if (pred[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(mask.size());
}

double evaluate(const ModelParams& params, const ModelInput& input, std::span<const int> labels,
                std::span<const int> mask) {
  check_mask(labels, mask, input.num_nodes());
  return accuracy(forward(params, input), labels, mask);
}

}  // namespace gcsr
