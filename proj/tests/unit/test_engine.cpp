#include "gcsr/engine.hpp"
#include "gcsr/error.hpp"
#include "gcsr/synthetic.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <numeric>
#include <random>

using namespace gcsr;
namespace fs = std::filesystem;

namespace {

struct MetaInstance {
  CondensedGraph graph;
  ModelParams start;
  ModelParams end;
};

MetaInstance meta_instance(std::uint64_t seed, int n = 8, int d = 4, int classes = 3, int hidden = 5) {
  std::mt19937_64 rng(seed);
  MetaInstance m;
  m.graph.features = oracle::random_matrix(n, d, rng);
  m.graph.adjacency.matrix = oracle::random_symmetric_nonneg(n, rng, 0.6);
  for (int i = 0; i < n; ++i) m.graph.labels.labels.push_back(i % classes);
  m.graph.labels.per_class_counts.assign(static_cast<std::size_t>(classes), 0);
  for (int y : m.graph.labels.labels) ++m.graph.labels.per_class_counts[static_cast<std::size_t>(y)];
  m.start = init_params(Arch::SGC, d, hidden, classes, seed + 1);
  m.end = m.start;
  for (auto& w : m.end.layers) w += oracle::random_matrix(w.rows(), w.cols(), rng, -0.05, 0.05);
  return m;
}

double loss_at(const MetaInstance& m, const Matrix& x, int k, int steps, double lr) {
  CondensedGraph g = m.graph;
  g.features = x;
  const auto [theta_hat, tape] = inner_train_unrolled(m.start, g, k, steps, lr);
  return matching_loss(theta_hat, m.end, m.start);
}

double worst_meta_error(std::uint64_t seed, int steps, double lr, int k) {
  const MetaInstance m = meta_instance(seed);
  const auto [theta_hat, tape] = inner_train_unrolled(m.start, m.graph, k, steps, lr);
  const Matrix g = meta_gradient(tape, m.end, m.start);
  std::vector<Eigen::Index> coords(static_cast<std::size_t>(g.size()));
  std::iota(coords.begin(), coords.end(), 0);
  const auto fd = oracle::central_differences([&](const Matrix& x) { return loss_at(m, x, k, steps, lr); },
                                              m.graph.features, coords, 1e-5);
  double worst = 0.0;
  for (std::size_t i = 0; i < coords.size(); ++i)
    worst = std::max(worst, oracle::relative_error(g.data()[coords[i]], fd[i], 1e-7));
  return worst;
}

GraphDataset sbm(std::uint64_t seed) {
  SbmSpec spec;
  spec.block_sizes = {20, 20, 20};
  spec.noise = 2.0;
  spec.seed = seed;
  return make_sbm(spec);
}

TrajectoryBuffer small_buffer(const GraphDataset& ds) {
  TrainConfig cfg;
  cfg.epochs = 10;
  return generate_expert_trajectories(ds, Arch::SGC, cfg, 2, 16);
}

bool bit_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

}  // namespace

TEST_CASE("matching loss special values and direct arithmetic") {
  const ModelParams a = init_params(Arch::SGC, 3, 4, 2, 1);
  const ModelParams b = init_params(Arch::SGC, 3, 4, 2, 2);
  CHECK(matching_loss(b, b, a) == 0.0);
  // theta_hat mirrored through theta_end: equal norms.
  ModelParams mirrored = b;
  mirrored *= 2.0;
  ModelParams neg_a = a;
  neg_a *= -1.0;
  mirrored += neg_a;
  CHECK(matching_loss(mirrored, b, a) == doctest::Approx(1.0).epsilon(1e-12));

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const ModelParams h = init_params(Arch::SGC, 3, 4, 2, rng());
    const ModelParams e = init_params(Arch::SGC, 3, 4, 2, rng());
    const ModelParams s = init_params(Arch::SGC, 3, 4, 2, rng());
    double num = 0, den = 0;
    for (std::size_t l = 0; l < 2; ++l)
      for (Eigen::Index i = 0; i < h.layers[l].size(); ++i) {
        num += std::pow(h.layers[l].data()[i] - e.layers[l].data()[i], 2);
        den += std::pow(e.layers[l].data()[i] - s.layers[l].data()[i], 2);
      }
    CHECK(std::abs(matching_loss(h, e, s) - num / den) <= 1e-12 * (num / den));
  }
  CHECK_THROWS_AS(matching_loss(a, b, b), DegenerateSegmentError);
}

TEST_CASE("inner loop identities") {
  const MetaInstance m = meta_instance(4);
  SUBCASE("zero learning rate leaves theta unchanged and the gradient zero") {
    const auto [theta_hat, tape] = inner_train_unrolled(m.start, m.graph, 2, 5, 0.0);
    CHECK(theta_hat.flatten() == m.start.flatten());
    CHECK(meta_gradient(tape, m.end, m.start).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("one step equals theta minus lr times the loss gradient") {
    const auto [theta_hat, tape] = inner_train_unrolled(m.start, m.graph, 2, 1, 0.01);
    const Matrix s = oracle::power_apply(oracle::normalize(m.graph.adjacency.matrix), m.graph.features, 2);
    NodeList all(8);
    std::iota(all.begin(), all.end(), 0);
    const LossGrad lg = loss_and_grad(m.start, ModelInput::sgc_from_propagated(s), m.graph.labels.labels, all);
    const Vector expected = m.start.flatten() - 0.01 * lg.grad.flatten();
    CHECK((theta_hat.flatten() - expected).cwiseAbs().maxCoeff() <= 1e-14);
  }
  SUBCASE("replay reproduces the tape") {
    const auto [theta_hat, tape] = inner_train_unrolled(m.start, m.graph, 2, 7, 0.1);
    REQUIRE(tape.num_steps() == 7);
    CHECK(replay(tape).flatten() == theta_hat.flatten());
  }
  SUBCASE("non-SGC students are rejected") {
    CHECK_THROWS_AS(inner_train_unrolled(init_params(Arch::GCN, 4, 5, 3, 0), m.graph, 2, 1, 0.01), ValidationError);
  }
}

TEST_CASE("meta-gradient matches central differences") {
  for (int steps : {1, 3, 5}) {
    for (double lr : {0.01, 0.5}) {
      for (int k : {0, 2}) {
        CAPTURE(steps);
        CAPTURE(lr);
        CAPTURE(k);
        CHECK(worst_meta_error(10 + static_cast<std::uint64_t>(steps), steps, lr, k) <= 1e-5);
      }
    }
  }
}

TEST_CASE("bootstrap update semantics") {
  std::mt19937_64 rng(5);
  RegularizerState s;
  s.prior = oracle::random_matrix(5, 5, rng, 0, 1);
  s.history = oracle::random_matrix(5, 5, rng, 0, 1);
  const SyntheticAdjacency a{oracle::random_symmetric_nonneg(5, rng)};

  RegularizerState frozen = s;
  frozen.tau = 1.0;
  frozen.gamma = 1.0;
  const RegularizerState f = bootstrap_update(frozen, a);
  CHECK(bit_equal(f.prior, s.prior));
  CHECK(bit_equal(f.history, s.history));

  RegularizerState replace = s;
  replace.tau = 0.0;
  replace.gamma = 0.0;
  const RegularizerState r = bootstrap_update(replace, a);
  CHECK(bit_equal(r.prior, a.matrix));
  CHECK(bit_equal(r.history, a.matrix));

  RegularizerState mid;
  mid.prior = Matrix::Zero(3, 3);
  mid.history = Matrix::Identity(3, 3);
  mid.gamma = 0.5;
  const RegularizerState m = bootstrap_update(mid, {Matrix::Ones(3, 3)});
  CHECK(m.history == 0.5 * (Matrix::Identity(3, 3) + Matrix::Ones(3, 3)));

  RegularizerState between = s;
  between.tau = 0.95;
  const RegularizerState b = bootstrap_update(between, a);
  for (Eigen::Index i = 0; i < 25; ++i) {
    const double lo = std::min(s.prior.data()[i], a.matrix.data()[i]);
    const double hi = std::max(s.prior.data()[i], a.matrix.data()[i]);
    CHECK(b.prior.data()[i] >= lo);
    CHECK(b.prior.data()[i] <= hi);
  }
}

TEST_CASE("condense with zero iterations returns the initialization") {
  const GraphDataset ds = sbm(1);
  const TrajectoryBuffer buf = small_buffer(ds);
  CondenseConfig cfg;
  cfg.ratio = 0.2;
  cfg.outer_iterations = 0;
  cfg.seed = 3;
  const CondenseResult res = condense(ds, buf, cfg);
  const SyntheticLabels syn = allocate_labels(ds.train_labels(), 3, 12);
  CHECK(res.losses.empty());
  CHECK(res.graph.labels.per_class_counts == syn.per_class_counts);
  CHECK(bit_equal(res.graph.features, init_features(ds, cfg.k, syn, cfg.seed)));
  const Matrix prior = init_prior(build_class_correlation(ds), syn).matrix;
  const Matrix z = solve_z({res.graph.features, prior, Matrix::Identity(12, 12), 1.0, 1.0});
  CHECK(bit_equal(res.graph.adjacency.matrix, symmetrize(z).matrix));
}

TEST_CASE("condense invariants") {
  const GraphDataset ds = sbm(2);
  const TrajectoryBuffer buf = small_buffer(ds);
  CondenseConfig cfg;
  cfg.ratio = 0.2;
  cfg.outer_iterations = 15;
  cfg.inner_steps = 5;
  cfg.seed = 9;
  int calls = 0;
  const CondenseResult a = condense(ds, buf, cfg, [&](int it, double loss) {
    CHECK(it == calls);
    CHECK(std::isfinite(loss));
    ++calls;
  });
  CHECK(calls == 15);
  CHECK(a.losses.size() == 15);
  CHECK(a.graph.labels.per_class_counts == allocate_labels(ds.train_labels(), 3, 12).per_class_counts);
  CHECK(a.graph.adjacency.matrix == a.graph.adjacency.matrix.transpose());
  CHECK(a.graph.adjacency.matrix.minCoeff() >= 0.0);
  CHECK(a.graph.provenance.at("method") == "gcsr");
  CHECK(a.graph.provenance.at("source_fingerprint") == fingerprint(ds));
  CHECK(a.graph.provenance.at("seed") == "9");

  const CondenseResult b = condense(ds, buf, cfg);
  CHECK(bit_equal(a.graph.features, b.graph.features));
  CHECK(bit_equal(a.graph.adjacency.matrix, b.graph.adjacency.matrix));
  CHECK(a.losses == b.losses);

  CondenseConfig other = cfg;
  other.seed = 10;
  CHECK_FALSE(bit_equal(condense(ds, buf, other).graph.features, a.graph.features));
}

TEST_CASE("identity structure mode emits the identity") {
  const GraphDataset ds = sbm(3);
  const TrajectoryBuffer buf = small_buffer(ds);
  CondenseConfig cfg;
  cfg.ratio = 0.2;
  cfg.outer_iterations = 3;
  cfg.structure = StructureMode::Identity;
  const CondenseResult res = condense(ds, buf, cfg);
  CHECK(res.graph.adjacency.matrix == Matrix::Identity(12, 12));
}

TEST_CASE("condense rejects bad configurations") {
  const GraphDataset ds = sbm(4);
  const TrajectoryBuffer buf = small_buffer(ds);
  CondenseConfig cfg;
  cfg.ratio = 1.5;
  try {
    condense(ds, buf, cfg);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()) == "ratio must be in (0,1)");
  }
  cfg = {};
  cfg.expert_steps = 11;
  CHECK_THROWS_AS(condense(ds, buf, cfg), ValidationError);
  cfg = {};
  cfg.alpha = 0.0;
  cfg.beta = 0.0;
  CHECK_THROWS_AS(condense(ds, buf, cfg), ValidationError);
  GraphDataset other = ds;
  other.labels[0] = (other.labels[0] + 1) % 3;
  CHECK_THROWS_AS(condense(other, buf, CondenseConfig{}), ValidationError);
}

TEST_CASE("condensed shape for a small ratio") {
  SbmSpec spec;
  spec.block_sizes = {200, 200, 100};
  spec.seed = 8;
  const GraphDataset ds = make_sbm(spec);
  TrainConfig tc;
  tc.epochs = 3;
  const TrajectoryBuffer buf = generate_expert_trajectories(ds, Arch::SGC, tc, 1, 8);
  CondenseConfig cfg;
  cfg.ratio = 0.026;
  cfg.outer_iterations = 2;
  const CondenseResult res = condense(ds, buf, cfg);
  CHECK(res.graph.num_nodes() == 13);
  CHECK(res.graph.features.cols() == ds.num_features());
  CHECK(res.graph.adjacency.matrix.rows() == 13);
  CHECK(res.graph.adjacency.matrix.cols() == 13);
}

TEST_CASE("condensed graph round-trips bit-exactly") {
  const GraphDataset ds = sbm(5);
  const TrajectoryBuffer buf = small_buffer(ds);
  CondenseConfig cfg;
  cfg.ratio = 0.2;
  cfg.outer_iterations = 4;
  const CondenseResult res = condense(ds, buf, cfg);
  const fs::path dir = fs::temp_directory_path() / "gcsr_test_condensed";
  fs::remove_all(dir);
  save_condensed(res.graph, dir, &res.losses);
  const CondensedGraph back = load_condensed(dir);
  CHECK(bit_equal(back.features, res.graph.features));
  CHECK(bit_equal(back.adjacency.matrix, res.graph.adjacency.matrix));
  CHECK(back.labels.labels == res.graph.labels.labels);
  CHECK(back.labels.per_class_counts == res.graph.labels.per_class_counts);
  CHECK(back.ratio == res.graph.ratio);
  CHECK(back.provenance == res.graph.provenance);
  const std::vector<double> losses = load_losses(dir);
  REQUIRE(losses.size() == res.losses.size());
  for (std::size_t i = 0; i < losses.size(); ++i)
    CHECK(std::memcmp(&losses[i], &res.losses[i], sizeof(double)) == 0);

  std::filesystem::resize_file(dir / "X.bin", fs::file_size(dir / "X.bin") - 8);
  CHECK_THROWS_AS(load_condensed(dir), FormatError);
}

TEST_CASE("matching loss trends downward on the block model") {
  SbmSpec spec;
  spec.noise = 3.0;
  spec.seed = 1;
  const GraphDataset ds = make_sbm(spec);
  TrainConfig tc;
  tc.epochs = 200;
  tc.seed = 100;
  const TrajectoryBuffer buf = generate_expert_trajectories(ds, Arch::SGC, tc, 10);
  double first = 0, last = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    CondenseConfig cfg;
    cfg.seed = seed;
    const CondenseResult res = condense(ds, buf, cfg);
    REQUIRE(res.losses.size() == 200);
    for (std::size_t i = 0; i < 20; ++i) {
      first += res.losses[i];
      last += res.losses[res.losses.size() - 1 - i];
    }
  }
  CHECK(last <= first);
}
