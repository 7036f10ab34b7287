#include "gcsr/synthetic.hpp"

#include "gcsr/error.hpp"

#include <algorithm>
#include <random>

namespace gcsr {

GraphDataset make_sbm(const SbmSpec& spec) {
  const int num_classes = static_cast<int>(spec.block_sizes.size());
  if (num_classes < 1) throw ValidationError("SBM needs at least one block");
  if (spec.num_features < 1) throw ValidationError("SBM needs at least one feature");
  std::mt19937_64 gen(spec.seed);

  Labels labels;
  for (int c = 0; c < num_classes; ++c) labels.insert(labels.end(), static_cast<std::size_t>(spec.block_sizes[static_cast<std::size_t>(c)]), c);
  const int n = static_cast<int>(labels.size());

  std::bernoulli_distribution in_edge(spec.p_in);
  std::bernoulli_distribution out_edge(spec.p_out);
  std::vector<Edge> edges;
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      const bool same = labels[static_cast<std::size_t>(u)] == labels[static_cast<std::size_t>(v)];
      if (same ? in_edge(gen) : out_edge(gen)) edges.emplace_back(u, v);
    }
  }

  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix means(num_classes, spec.num_features);
  for (int c = 0; c < num_classes; ++c) {
    for (int j = 0; j < spec.num_features; ++j) means(c, j) = normal(gen);
    means.row(c) *= spec.signal / means.row(c).norm();
  }
  Matrix features(n, spec.num_features);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < spec.num_features; ++j) {
      features(i, j) = means(labels[static_cast<std::size_t>(i)], j) + spec.noise * normal(gen);
    }
  }

  Splits splits;
  int start = 0;
  for (int c = 0; c < num_classes; ++c) {
    const int size = spec.block_sizes[static_cast<std::size_t>(c)];
    NodeList nodes(static_cast<std::size_t>(size));
    for (int i = 0; i < size; ++i) nodes[static_cast<std::size_t>(i)] = start + i;
    std::shuffle(nodes.begin(), nodes.end(), gen);
    const int n_train = std::max(1, static_cast<int>(spec.train_fraction * size + 0.5));
    const int n_val = static_cast<int>(spec.val_fraction * size + 0.5);
    for (int i = 0; i < size; ++i) {
      NodeList& dst = i < n_train ? splits.train : (i < n_train + n_val ? splits.val : splits.test);
      dst.push_back(nodes[static_cast<std::size_t>(i)]);
    }
    start += size;
  }
  for (NodeList* s : {&splits.train, &splits.val, &splits.test}) std::sort(s->begin(), s->end());
  return make_dataset(edges, std::move(features), std::move(labels), num_classes, std::move(splits), spec.mode);
}

}  // namespace gcsr
