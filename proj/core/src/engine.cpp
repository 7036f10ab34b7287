#include "gcsr/engine.hpp"

#include "gcsr/error.hpp"
#include "io_util.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace gcsr {

std::string_view to_string(StructureMode mode) {
  return mode == StructureMode::SelfExpressive ? "self-expressive" : "identity";
}

StructureMode parse_structure(std::string_view text) {
  if (text == "self-expressive" || text == "self_expressive") return StructureMode::SelfExpressive;
  if (text == "identity") return StructureMode::Identity;
  throw ValidationError("structure must be 'self-expressive' or 'identity', got '" + std::string(text) + "'");
}

void CondenseConfig::validate() const {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ValidationError("ratio must be in (0,1)");
  if (inner_steps < 1) throw ValidationError("inner_steps_n must be >= 1");
  if (expert_steps < 1) throw ValidationError("expert_steps_m must be >= 1");
  if (!(inner_lr > 0.0)) throw ValidationError("inner_lr must be > 0");
  if (!(feature_lr > 0.0)) throw ValidationError("feature_lr must be > 0");
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw ValidationError("alpha and beta must be >= 0");
  if (structure == StructureMode::SelfExpressive && !(alpha + beta > 0.0)) {
    throw ValidationError("alpha + beta must be > 0");
  }
  if (!(tau >= 0.0 && tau <= 1.0)) throw ValidationError("tau must be in [0,1]");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ValidationError("gamma must be in [0,1]");
  if (k < 0) throw ValidationError("k must be >= 0");
  if (outer_iterations < 0) throw ValidationError("iters must be >= 0");
  if (!(sparsify_threshold >= 0.0)) throw ValidationError("sparsify_threshold must be >= 0");
  if (t_min < 0) throw ValidationError("t_min must be >= 0");
  if (t_max != -1 && t_max < t_min) throw ValidationError("t_max must be -1 or >= t_min");
}

std::map<std::string, std::string> CondenseConfig::to_map() const {
  using detail::format_double;
  return {
      {"ratio", format_double(ratio)},
      {"inner_steps_n", std::to_string(inner_steps)},
      {"expert_steps_m", std::to_string(expert_steps)},
      {"inner_lr", format_double(inner_lr)},
      {"feature_lr", format_double(feature_lr)},
      {"alpha", format_double(alpha)},
      {"beta", format_double(beta)},
      {"tau", format_double(tau)},
      {"gamma", format_double(gamma)},
      {"k", std::to_string(k)},
      {"iters", std::to_string(outer_iterations)},
      {"seed", std::to_string(seed)},
      {"structure", std::string(to_string(structure))},
      {"sparsify_threshold", format_double(sparsify_threshold)},
      {"t_min", std::to_string(t_min)},
      {"t_max", std::to_string(t_max)},
  };
}

void CondensedGraph::validate() const {
  const auto n = features.rows();
  if (adjacency.matrix.rows() != n || adjacency.matrix.cols() != n) throw ShapeError("A' must be N' x N'");
  if (static_cast<Eigen::Index>(labels.labels.size()) != n) throw ShapeError("Y' must have N' entries");
  if (n > 0 && adjacency.matrix.minCoeff() < 0.0) throw ValidationError("A' has negative entries");
  if (adjacency.matrix != adjacency.matrix.transpose()) throw ValidationError("A' is not symmetric");
  std::vector<int> counts(labels.per_class_counts.size(), 0);
  for (int y : labels.labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= counts.size()) throw ValidationError("Y' label out of range");
    ++counts[static_cast<std::size_t>(y)];
  }
  if (counts != labels.per_class_counts) throw ValidationError("Y' does not match its per-class counts");
}

RegularizerState bootstrap_update(RegularizerState state, const SyntheticAdjacency& adj) {
  if (!(state.tau >= 0.0 && state.tau <= 1.0) || !(state.gamma >= 0.0 && state.gamma <= 1.0)) {
    throw ValidationError("tau and gamma must be in [0,1]");
  }
  if (state.prior.rows() != adj.matrix.rows() || state.prior.cols() != adj.matrix.cols() ||
      state.history.rows() != adj.matrix.rows() || state.history.cols() != adj.matrix.cols()) {
    throw ShapeError("regularizer and A' shapes differ");
  }
  state.prior = state.tau * state.prior + (1.0 - state.tau) * adj.matrix;
  state.history = state.gamma * state.history + (1.0 - state.gamma) * adj.matrix;
  return state;
}

double matching_loss(const ModelParams& theta_hat, const ModelParams& theta_end, const ModelParams& theta_start) {
  if (!theta_hat.same_shape(theta_end) || !theta_end.same_shape(theta_start)) {
    throw ShapeError("matching_loss: parameter sets have different shapes");
  }
  const double den = squared_distance(theta_end, theta_start);
  if (!(den > 0.0)) throw DegenerateSegmentError("degenerate expert segment: theta_{t+M} equals theta_t");
  return squared_distance(theta_hat, theta_end) / den;
}

namespace {

NodeList all_nodes(std::size_t n) {
  NodeList out(n);
  std::iota(out.begin(), out.end(), 0);
  return out;
}

void check_student(const ModelParams& theta, Eigen::Index d, int num_classes) {
  theta.check_chain();
  if (theta.arch != Arch::SGC) throw ValidationError("the condensation student must be SGC");
  if (theta.layers[0].rows() != d) {
    throw ShapeError("student expects " + std::to_string(theta.layers[0].rows()) + " features, condensed graph has " +
                     std::to_string(d));
  }
  if (theta.num_classes() != num_classes) throw ShapeError("student output width differs from the class count");
}

// One SGD step of the student from `w` on precomputed inputs.
ModelParams sgd_step(const ModelParams& w, const ModelInput& input, const Labels& labels, const NodeList& mask,
                     double lr, int step) {
  LossGrad lg = loss_and_grad(w, input, labels, mask, 0.0);
  if (!std::isfinite(lg.loss)) {
    throw DivergenceError("inner loop diverged at step " + std::to_string(step), step);
  }
  ModelParams next = w;
  for (std::size_t l = 0; l < next.layers.size(); ++l) next.layers[l] -= lr * lg.grad.layers[l];
  for (const auto& layer : next.layers) {
    if (!layer.allFinite()) throw DivergenceError("inner loop diverged at step " + std::to_string(step), step);
  }
  return next;
}

}  // namespace

std::pair<ModelParams, UnrolledTape> inner_train_unrolled(const ModelParams& theta_t, const CondensedGraph& condensed,
                                                          int k, int n, double inner_lr) {
  if (n < 1) throw ValidationError("inner steps n must be >= 1");
  if (!(inner_lr >= 0.0)) throw ValidationError("inner_lr must be >= 0");
  const int num_classes = static_cast<int>(condensed.labels.per_class_counts.size());
  check_student(theta_t, condensed.features.cols(), num_classes);

  UnrolledTape tape;
  const NormalizedAdjacency norm = normalize_adjacency(condensed.adjacency.matrix, true);
  tape.inputs = propagate(norm, condensed.features, k).matrix;
  tape.norm_adj = norm.dense();
  tape.k = k;
  tape.labels = condensed.labels.labels;
  tape.lr = inner_lr;
  tape.steps.reserve(static_cast<std::size_t>(n) + 1);
  tape.steps.push_back(theta_t);

  const ModelInput input = ModelInput::sgc_from_propagated(tape.inputs);
  const NodeList mask = all_nodes(tape.labels.size());
  for (int i = 0; i < n; ++i) tape.steps.push_back(sgd_step(tape.steps.back(), input, tape.labels, mask, inner_lr, i));
  ModelParams theta_hat = tape.steps.back();
  return {std::move(theta_hat), std::move(tape)};
}

ModelParams replay(const UnrolledTape& tape) {
  if (tape.steps.empty()) throw ValidationError("empty tape");
  const ModelInput input = ModelInput::sgc_from_propagated(tape.inputs);
  const NodeList mask = all_nodes(tape.labels.size());
  ModelParams w = tape.steps.front();
  for (int i = 0; i < tape.num_steps(); ++i) w = sgd_step(w, input, tape.labels, mask, tape.lr, i);
  return w;
}

Matrix meta_gradient(const UnrolledTape& tape, const ModelParams& theta_end, const ModelParams& theta_start) {
  if (tape.steps.size() < 2) throw ValidationError("tape must hold at least one inner step");
  const ModelParams& theta_hat = tape.steps.back();
  if (!theta_hat.same_shape(theta_end) || !theta_end.same_shape(theta_start)) {
    throw ValidationError("tape and expert checkpoints have different shapes");
  }
  const Matrix& s = tape.inputs;
  const auto n_nodes = s.rows();
  if (static_cast<Eigen::Index>(tape.labels.size()) != n_nodes || tape.norm_adj.rows() != n_nodes) {
    throw ValidationError("tape is inconsistent with its inputs");
  }
  const double den = squared_distance(theta_end, theta_start);
  if (!(den > 0.0)) throw DegenerateSegmentError("degenerate expert segment: theta_{t+M} equals theta_t");

  // Adjoints of the final student weights.
  Matrix bar_w1 = (2.0 / den) * (theta_hat.layers[0] - theta_end.layers[0]);
  Matrix bar_w2 = (2.0 / den) * (theta_hat.layers[1] - theta_end.layers[1]);
  Matrix bar_s = Matrix::Zero(s.rows(), s.cols());
  const double inv_n = 1.0 / static_cast<double>(n_nodes);
  const double lr = tape.lr;

  // Step i maps W_i to W_i - lr * g(W_i, S) with g1 = Sᵀ E W2ᵀ, g2 = W1ᵀ Sᵀ E and
  // E = (softmax(S W1 W2) - Y) / N'. Backpropagate phi = <bar_w1, g1> + <bar_w2, g2>.
  for (int i = tape.num_steps() - 1; i >= 0; --i) {
    const Matrix& w1 = tape.steps[static_cast<std::size_t>(i)].layers[0];
    const Matrix& w2 = tape.steps[static_cast<std::size_t>(i)].layers[1];
    const Matrix h = s * w1;
    const Matrix logits = h * w2;

    Matrix prob(logits.rows(), logits.cols());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
      const Eigen::RowVectorXd ex = (logits.row(r).array() - logits.row(r).maxCoeff()).exp().matrix();
      prob.row(r) = ex / ex.sum();
    }
    Matrix e = prob;
    for (Eigen::Index r = 0; r < n_nodes; ++r) e(r, tape.labels[static_cast<std::size_t>(r)]) -= 1.0;
    e *= inv_n;

    // phi = <R, E> with R = S B for E held fixed.
    const Matrix b = bar_w1 * w2 + w1 * bar_w2;  // d x C
    const Matrix r = s * b;
    // Back through the row-wise softmax: Q = P ⊙ (R - rowsum(P ⊙ R)) / N'.
    const Vector pr = prob.cwiseProduct(r).rowwise().sum();
    const Matrix q = (prob.array() * (r.colwise() - pr).array()).matrix() * inv_n;

    const Matrix d_s = q * (w1 * w2).transpose() + e * b.transpose();
    const Matrix d_w1 = s.transpose() * (q * w2.transpose() + e * bar_w2.transpose());
    const Matrix d_w2 = h.transpose() * q + (s * bar_w1).transpose() * e;

    bar_s -= lr * d_s;
    bar_w1 -= lr * d_w1;
    bar_w2 -= lr * d_w2;
  }

  // S = Â'^k X' with Â' symmetric, so dD/dX' = Â'^k bar_S.
  Matrix grad = bar_s;
  for (int step = 0; step < tape.k; ++step) grad = tape.norm_adj.transpose() * grad;
  return grad;
}

namespace {

void check_adjacency(const SyntheticAdjacency& adj, int iteration) {
  if (!adj.matrix.allFinite() || (adj.matrix.size() > 0 && adj.matrix.minCoeff() < 0.0) ||
      adj.matrix != adj.matrix.transpose()) {
    throw NumericError("iteration " + std::to_string(iteration) + ": A' is not symmetric nonnegative");
  }
}

SyntheticAdjacency solve_structure(const CondenseConfig& cfg, const Matrix& features, const RegularizerState& reg) {
  if (cfg.structure == StructureMode::Identity) {
    return {Matrix::Identity(features.rows(), features.rows())};
  }
  return symmetrize(solve_z(SelfExpressiveProblem{features, reg.prior, reg.history, cfg.alpha, cfg.beta}));
}

}  // namespace

CondenseResult condense(const GraphDataset& dataset, const TrajectoryBuffer& buffer, const CondenseConfig& cfg,
                        const IterationCallback& on_iteration) {
  cfg.validate();
  buffer.validate();
  buffer.check_dataset(dataset);
  if (buffer.arch != Arch::SGC) throw ValidationError("condensation needs an SGC trajectory buffer");
  check_student(buffer.experts.front().checkpoints.front(), dataset.num_features(), dataset.num_classes);
  if (cfg.expert_steps >= buffer.shortest()) {
    throw ValidationError("expert_steps_m = " + std::to_string(cfg.expert_steps) +
                          " does not fit in trajectories of length " + std::to_string(buffer.shortest()));
  }

  const Labels train_labels = dataset.train_labels();
  const int target = condensed_size(dataset, cfg.ratio);
  CondensedGraph graph;
  graph.labels = allocate_labels(train_labels, dataset.num_classes, target);
  graph.features = init_features(dataset, cfg.k, graph.labels, cfg.seed);
  graph.ratio = cfg.ratio;

  const auto n = static_cast<Eigen::Index>(target);
  RegularizerState reg;
  reg.tau = cfg.tau;
  reg.gamma = cfg.gamma;
  if (cfg.structure == StructureMode::SelfExpressive) {
    reg.prior = init_prior(build_class_correlation(dataset), graph.labels).matrix;
    reg.history = Matrix::Identity(n, n);
  }

  std::mt19937_64 rng(cfg.seed + 0x9e3779b97f4a7c15ULL);
  const SegmentWindow window{cfg.t_min, cfg.t_max >= 0 ? std::optional<int>(cfg.t_max) : std::nullopt};
  AdamState adam(cfg.feature_lr);
  std::vector<double> losses;
  losses.reserve(static_cast<std::size_t>(cfg.outer_iterations));

  for (int it = 0; it < cfg.outer_iterations; ++it) {
    try {
      graph.adjacency = solve_structure(cfg, graph.features, reg);
      check_adjacency(graph.adjacency, it);

      constexpr int kMaxSegmentDraws = 10;
      for (int draw = 0;; ++draw) {
        const Segment seg = sample_segment(buffer, cfg.expert_steps, rng, window);
        if (squared_distance(seg.end, seg.start) == 0.0) {
          if (draw + 1 >= kMaxSegmentDraws) {
            throw DegenerateSegmentError("no non-degenerate expert segment after " + std::to_string(kMaxSegmentDraws) +
                                         " draws");
          }
          continue;
        }
        auto [theta_hat, tape] = inner_train_unrolled(seg.start, graph, buffer.k, cfg.inner_steps, cfg.inner_lr);
        const double loss = matching_loss(theta_hat, seg.end, seg.start);
        const Matrix grad = meta_gradient(tape, seg.end, seg.start);
        if (!std::isfinite(loss) || !grad.allFinite()) {
          throw DivergenceError("non-finite matching loss or gradient", it);
        }
        losses.push_back(loss);
        adam.step(graph.features, grad);
        break;
      }
      if (cfg.structure == StructureMode::SelfExpressive) reg = bootstrap_update(std::move(reg), graph.adjacency);
    } catch (const DivergenceError& e) {
      throw DivergenceError("outer iteration " + std::to_string(it) + ": " + e.what(), it);
    } catch (const NumericError& e) {
      throw NumericError("outer iteration " + std::to_string(it) + ": " + e.what());
    }
    if (on_iteration) on_iteration(it, losses.back());
  }

  graph.adjacency = solve_structure(cfg, graph.features, reg);
  check_adjacency(graph.adjacency, cfg.outer_iterations);
  graph.adjacency = sparsify(std::move(graph.adjacency), cfg.sparsify_threshold);

  graph.provenance = cfg.to_map();
  graph.provenance["method"] = "gcsr";
  graph.provenance["source_fingerprint"] = buffer.fingerprint;
  graph.provenance["buffer_k"] = std::to_string(buffer.k);
  graph.provenance["buffer_hidden"] = std::to_string(buffer.hidden);
  graph.validate();
  return {std::move(graph), std::move(losses)};
}

}  // namespace gcsr
