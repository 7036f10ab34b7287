#include "gcsr/evalkit.hpp"

#include "gcsr/condense_init.hpp"
#include "gcsr/error.hpp"
#include "io_util.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <string>

namespace gcsr {

AccuracyReport AccuracyReport::from_runs(std::vector<double> runs, Arch arch, int epochs, int repeats) {
  AccuracyReport r;
  r.runs = std::move(runs);
  r.arch = arch;
  r.epochs = epochs;
  r.repeats = repeats;
  if (!r.runs.empty()) {
    r.mean = std::accumulate(r.runs.begin(), r.runs.end(), 0.0) / static_cast<double>(r.runs.size());
    double var = 0.0;
    for (double a : r.runs) var += (a - r.mean) * (a - r.mean);
    r.std = std::sqrt(var / static_cast<double>(r.runs.size()));
  }
  return r;
}

AccuracyReport test_stage(const CondensedGraph& condensed, const GraphDataset& dataset, const TestStageConfig& cfg) {
  condensed.validate();
  if (condensed.features.cols() != dataset.num_features()) {
    throw ValidationError("condensed graph has " + std::to_string(condensed.features.cols()) +
                          " features, dataset has " + std::to_string(dataset.num_features()));
  }
  if (static_cast<int>(condensed.labels.per_class_counts.size()) != dataset.num_classes) {
    throw ValidationError("condensed graph and dataset disagree on the class count");
  }
  if (cfg.repeats < 1) throw ValidationError("repeats must be >= 1");
  if (dataset.test.empty()) throw ValidationError("dataset has an empty test mask");

  const ModelInput syn_input(cfg.arch, normalize_adjacency(condensed.adjacency.matrix, true), condensed.features, cfg.k);
  const ModelInput real_input(cfg.arch, normalize_adjacency(dataset.adjacency, true), dataset.features, cfg.k);
  NodeList syn_mask(condensed.labels.labels.size());
  std::iota(syn_mask.begin(), syn_mask.end(), 0);

  TrainConfig tc;
  tc.learning_rate = cfg.learning_rate;
  tc.weight_decay = cfg.weight_decay;
  tc.epochs = cfg.epochs;
  tc.optimizer = Optimizer::Adam;

  std::vector<double> runs;
  std::vector<std::string> warnings;
  for (int r = 0; r < cfg.repeats; ++r) {
    tc.seed = cfg.seed + static_cast<std::uint64_t>(r);
    const ModelParams p0 =
        init_params(cfg.arch, dataset.num_features(), cfg.hidden, dataset.num_classes, tc.seed);
    try {
      const TrainResult res = train(syn_input, condensed.labels.labels, syn_mask, p0, tc, false);
      runs.push_back(evaluate(res.final_params, real_input, dataset.labels, dataset.test));
    } catch (const DivergenceError& e) {
      warnings.push_back("run " + std::to_string(r) + " excluded: " + e.what());
      std::cerr << "warning: test-stage " << warnings.back() << "\n";
    }
  }
  AccuracyReport report = AccuracyReport::from_runs(std::move(runs), cfg.arch, cfg.epochs, cfg.repeats);
  report.warnings = std::move(warnings);
  return report;
}

namespace {

// Unit-normalised neighbour-label distributions; zero rows mark isolated nodes.
template <typename RowFn>
CcnsMatrix ccns_from_rows(Eigen::Index n, std::span<const int> labels, int num_classes, RowFn&& row_hist) {
  if (static_cast<Eigen::Index>(labels.size()) != n) throw ShapeError("label count does not match adjacency");
  Matrix sums = Matrix::Zero(num_classes, num_classes);  // row c = sum of unit vectors of class c
  std::vector<int> count(static_cast<std::size_t>(num_classes), 0);
  CcnsMatrix out;
  for (Eigen::Index u = 0; u < n; ++u) {
    Eigen::RowVectorXd hist = Eigen::RowVectorXd::Zero(num_classes);
    row_hist(u, hist);
    const double norm = hist.norm();
    if (!(norm > 0.0)) {
      ++out.isolated_skipped;
      continue;
    }
    const int c = labels[static_cast<std::size_t>(u)];
    sums.row(c) += hist / norm;
    ++count[static_cast<std::size_t>(c)];
  }
  for (int c = 0; c < num_classes; ++c) {
    if (count[static_cast<std::size_t>(c)] == 0) {
      throw ValidationError("ccns: class " + std::to_string(c) + " has no node with neighbours");
    }
  }
  if (out.isolated_skipped > 0) {
    std::cerr << "warning: ccns skipped " << out.isolated_skipped << " isolated node(s)\n";
  }
  out.matrix.resize(num_classes, num_classes);
  for (int a = 0; a < num_classes; ++a) {
    for (int b = 0; b < num_classes; ++b) {
      const double na = count[static_cast<std::size_t>(a)];
      const double nb = count[static_cast<std::size_t>(b)];
      double s;
      if (a != b) {
        s = sums.row(a).dot(sums.row(b)) / (na * nb);
      } else if (na > 1) {
        // Each unit vector has self-similarity exactly 1; drop those pairs.
        s = (sums.row(a).squaredNorm() - na) / (na * (na - 1.0));
      } else {
        s = 1.0;
      }
      out.matrix(a, b) = std::clamp(s, 0.0, 1.0);
    }
  }
  return out;
}

void check_labels(std::span<const int> labels, int num_classes) {
  for (int y : labels) {
    if (y < 0 || y >= num_classes) throw ValidationError("label " + std::to_string(y) + " out of range");
  }
}

}  // namespace

CcnsMatrix ccns(const Matrix& adjacency, std::span<const int> labels, int num_classes) {
  if (adjacency.rows() != adjacency.cols()) throw ShapeError("adjacency must be square");
  check_labels(labels, num_classes);
  return ccns_from_rows(adjacency.rows(), labels, num_classes, [&](Eigen::Index u, Eigen::RowVectorXd& hist) {
    for (Eigen::Index v = 0; v < adjacency.cols(); ++v) hist(labels[static_cast<std::size_t>(v)]) += adjacency(u, v);
  });
}

CcnsMatrix ccns(const SparseMatrix& adjacency, std::span<const int> labels, int num_classes) {
  if (adjacency.rows() != adjacency.cols()) throw ShapeError("adjacency must be square");
  check_labels(labels, num_classes);
  return ccns_from_rows(adjacency.rows(), labels, num_classes, [&](Eigen::Index u, Eigen::RowVectorXd& hist) {
    for (SparseMatrix::InnerIterator it(adjacency, u); it; ++it) {
      hist(labels[static_cast<std::size_t>(it.col())]) += it.value();
    }
  });
}

double silhouette(const Matrix& features, std::span<const int> labels) {
  const auto n = features.rows();
  if (static_cast<Eigen::Index>(labels.size()) != n) throw ShapeError("label count does not match features");
  if (n == 0) throw ValidationError("silhouette: no points");
  const int max_label = *std::max_element(labels.begin(), labels.end());
  if (*std::min_element(labels.begin(), labels.end()) < 0) throw ValidationError("silhouette: negative label");
  std::vector<int> size(static_cast<std::size_t>(max_label) + 1, 0);
  for (int y : labels) ++size[static_cast<std::size_t>(y)];
  const auto clusters = std::count_if(size.begin(), size.end(), [](int s) { return s > 0; });
  if (clusters < 2) throw ValidationError("silhouette is undefined for a single class");

  double total = 0.0;
  std::vector<double> dist_sum(size.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const int ci = labels[static_cast<std::size_t>(i)];
    if (size[static_cast<std::size_t>(ci)] == 1) continue;  // contributes 0
    std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      dist_sum[static_cast<std::size_t>(labels[static_cast<std::size_t>(j)])] += (features.row(i) - features.row(j)).norm();
    }
    const double a = dist_sum[static_cast<std::size_t>(ci)] / (size[static_cast<std::size_t>(ci)] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < size.size(); ++c) {
      if (static_cast<int>(c) != ci && size[c] > 0) b = std::min(b, dist_sum[c] / size[c]);
    }
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

namespace {

CondensedGraph subgraph_as_condensed(const GraphDataset& dataset, const NodeList& chosen, const SyntheticLabels& syn) {
  CondensedGraph g;
  g.labels = syn;
  g.features.resize(static_cast<Eigen::Index>(chosen.size()), dataset.features.cols());
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    g.features.row(static_cast<Eigen::Index>(i)) = dataset.features.row(chosen[i]);
    if (dataset.labels[static_cast<std::size_t>(chosen[i])] != syn.labels[i]) {
      throw NumericError("coreset selection out of class order");
    }
  }
  g.adjacency.matrix = Matrix(induced_subgraph(dataset.adjacency, chosen));
  return g;
}

}  // namespace

CondensedGraph random_coreset(const GraphDataset& dataset, double ratio, std::uint64_t seed) {
  const int target = condensed_size(dataset, ratio);
  const SyntheticLabels syn = allocate_labels(dataset.train_labels(), dataset.num_classes, target);
  const NodeList chosen = sample_per_class(dataset.labels, dataset.train, syn.per_class_counts, seed);
  CondensedGraph g = subgraph_as_condensed(dataset, chosen, syn);
  g.ratio = ratio;
  g.provenance = {{"method", "random"},
                  {"ratio", detail::format_double(ratio)},
                  {"seed", std::to_string(seed)},
                  {"source_fingerprint", fingerprint(dataset)}};
  g.validate();
  return g;
}

CondensedGraph training_subgraph(const GraphDataset& dataset) {
  SyntheticLabels syn;
  syn.per_class_counts.assign(static_cast<std::size_t>(dataset.num_classes), 0);
  for (int y : dataset.train_labels()) ++syn.per_class_counts[static_cast<std::size_t>(y)];
  const NodeList chosen = sample_per_class(dataset.labels, dataset.train, syn.per_class_counts, 0);
  for (int i : chosen) syn.labels.push_back(dataset.labels[static_cast<std::size_t>(i)]);
  CondensedGraph g = subgraph_as_condensed(dataset, chosen, syn);
  g.ratio = static_cast<double>(dataset.train.size()) / dataset.num_nodes();
  g.provenance = {{"method", "train-subgraph"}, {"source_fingerprint", fingerprint(dataset)}};
  g.validate();
  return g;
}

std::string metrics_json(const AccuracyReport* report, const CcnsMatrix* ccns_matrix, const double* silhouette_score,
                         const std::map<std::string, std::string>& config) {
  nlohmann::json j;
  if (report) {
    j["accuracy"] = {{"mean", report->mean},
                     {"std", report->std},
                     {"runs", report->runs},
                     {"arch", std::string(to_string(report->arch))},
                     {"epochs", report->epochs},
                     {"repeats", report->repeats},
                     {"excluded", report->warnings}};
  }
  if (ccns_matrix) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < ccns_matrix->matrix.rows(); ++i) {
      std::vector<double> row;
      for (Eigen::Index c = 0; c < ccns_matrix->matrix.cols(); ++c) row.push_back(ccns_matrix->matrix(i, c));
      rows.push_back(row);
    }
    j["ccns"] = rows;
  }
  if (silhouette_score) j["silhouette"] = *silhouette_score;
  j["config"] = config;
  return j.dump(2) + "\n";
}

void write_ccns_csv(const std::filesystem::path& path, const CcnsMatrix& m) {
  std::string csv = "class";
  for (Eigen::Index c = 0; c < m.matrix.cols(); ++c) csv += ",c" + std::to_string(c);
  csv += "\n";
  for (Eigen::Index r = 0; r < m.matrix.rows(); ++r) {
    csv += std::to_string(r);
    for (Eigen::Index c = 0; c < m.matrix.cols(); ++c) csv += "," + detail::format_double(m.matrix(r, c));
    csv += "\n";
  }
  detail::write_text_file(path, csv);
}

void write_features_csv(const std::filesystem::path& path, const Matrix& features, std::span<const int> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != features.rows()) throw ShapeError("label count does not match features");
  std::string csv = "label";
  for (Eigen::Index c = 0; c < features.cols(); ++c) csv += ",f" + std::to_string(c);
  csv += "\n";
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    csv += std::to_string(labels[static_cast<std::size_t>(r)]);
    for (Eigen::Index c = 0; c < features.cols(); ++c) csv += "," + detail::format_double(features(r, c));
    csv += "\n";
  }
  detail::write_text_file(path, csv);
}

}  // namespace gcsr
