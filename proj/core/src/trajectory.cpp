#include "gcsr/trajectory.hpp"

#include "gcsr/error.hpp"
#include "io_util.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <future>
#include <thread>

namespace gcsr {

namespace fs = std::filesystem;
using nlohmann::json;

void TrajectoryBuffer::validate() const {
  if (experts.empty()) throw ValidationError("trajectory buffer has no experts");
  const ModelParams& ref = experts.front().checkpoints.front();
  for (std::size_t e = 0; e < experts.size(); ++e) {
    const auto& cps = experts[e].checkpoints;
    if (cps.size() < 2) {
      throw ValidationError("expert " + std::to_string(e) + " has fewer than 2 checkpoints");
    }
    for (const auto& cp : cps) {
      if (!cp.same_shape(ref)) throw ShapeError("expert " + std::to_string(e) + " has mismatched checkpoint shapes");
    }
  }
}

void TrajectoryBuffer::check_dataset(const GraphDataset& dataset) const {
  const std::string actual = gcsr::fingerprint(dataset);
  if (actual != fingerprint) {
    throw ValidationError("trajectory buffer was generated for dataset " + fingerprint + " but got " + actual);
  }
}

int TrajectoryBuffer::shortest() const {
  std::size_t n = experts.empty() ? 0 : experts.front().checkpoints.size();
  for (const auto& t : experts) n = std::min(n, t.checkpoints.size());
  return static_cast<int>(n);
}

TrajectoryBuffer generate_expert_trajectories(const GraphDataset& dataset, Arch arch, const TrainConfig& cfg,
                                              int num_experts, int hidden, int k) {
  if (num_experts < 1) throw ValidationError("num_experts must be >= 1");
  cfg.validate();
  const TrainingView view = training_view(dataset);
  const ModelInput input(arch, normalize_adjacency(view.adjacency), view.features, k);

  TrajectoryBuffer buffer;
  buffer.arch = arch;
  buffer.train = cfg;
  buffer.hidden = hidden;
  buffer.k = k;
  buffer.fingerprint = fingerprint(dataset);
  buffer.experts.resize(static_cast<std::size_t>(num_experts));

  auto run_expert = [&](int e) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(e);
    const ModelParams p0 = init_params(arch, dataset.num_features(), hidden, dataset.num_classes, seed);
    try {
      TrainResult r = train(input, view.labels, view.mask, p0, cfg);
      buffer.experts[static_cast<std::size_t>(e)] = Trajectory{seed, std::move(r.checkpoints)};
    } catch (const DivergenceError& err) {
      throw DivergenceError("expert " + std::to_string(e) + ": " + err.what(), err.step());
    }
  };

  // Experts are independent; run them in waves of the available cores.
  const int workers = std::max(1u, std::thread::hardware_concurrency());
  for (int start = 0; start < num_experts; start += workers) {
    const int stop = std::min(num_experts, start + workers);
    std::vector<std::future<void>> wave;
    for (int e = start + 1; e < stop; ++e) wave.push_back(std::async(std::launch::async, run_expert, e));
    run_expert(start);
    for (auto& f : wave) f.get();
  }
  return buffer;
}

Segment sample_segment(const TrajectoryBuffer& buffer, int m, std::mt19937_64& rng, const SegmentWindow& window) {
  if (m < 1) throw ValidationError("expert segment length m must be >= 1");
  if (buffer.experts.empty()) throw ValidationError("trajectory buffer has no experts");
  if (m >= buffer.shortest()) {
    throw ValidationError("segment too long: m = " + std::to_string(m) + " but the shortest trajectory has " +
                          std::to_string(buffer.shortest()) + " checkpoints");
  }
  std::vector<long> counts;
  long total = 0;
  for (const auto& traj : buffer.experts) {
    const int last = static_cast<int>(traj.checkpoints.size()) - 1 - m;
    const int hi = window.t_max ? std::min(*window.t_max, last) : last;
    const long c = std::max(0, hi - window.t_min + 1);
    counts.push_back(c);
    total += c;
  }
  if (total == 0) throw ValidationError("sampling window contains no valid segment start");
  std::uniform_int_distribution<long> dist(0, total - 1);
  long u = dist(rng);
  for (std::size_t e = 0; e < counts.size(); ++e) {
    if (u < counts[e]) {
      const int t = window.t_min + static_cast<int>(u);
      const auto& cps = buffer.experts[e].checkpoints;
      return Segment{cps[static_cast<std::size_t>(t)], cps[static_cast<std::size_t>(t + m)], t, static_cast<int>(e)};
    }
    u -= counts[e];
  }
  throw NumericError("sample_segment: internal sampling error");
}

namespace {

std::string checkpoint_name(std::size_t expert, std::size_t epoch) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "expert_%03zu_epoch_%04zu.ckpt", expert, epoch);
  return buf;
}

}  // namespace

void save_buffer(const TrajectoryBuffer& buffer, const fs::path& dir) {
  buffer.validate();
  fs::create_directories(dir);
  json experts = json::array();
  for (std::size_t e = 0; e < buffer.experts.size(); ++e) {
    const auto& traj = buffer.experts[e];
    experts.push_back({{"seed", traj.seed}, {"checkpoints", traj.checkpoints.size()}});
    for (std::size_t t = 0; t < traj.checkpoints.size(); ++t) {
      save_checkpoint(dir / checkpoint_name(e, t), Checkpoint{traj.checkpoints[t], static_cast<int>(t), traj.seed});
    }
  }
  const json meta = {
      {"arch", std::string(to_string(buffer.arch))},
      {"hidden", buffer.hidden},
      {"k", buffer.k},
      {"cfg",
       {{"learning_rate", buffer.train.learning_rate},
        {"weight_decay", buffer.train.weight_decay},
        {"epochs", buffer.train.epochs},
        {"optimizer", std::string(to_string(buffer.train.optimizer))},
        {"seed", buffer.train.seed}}},
      {"num_experts", buffer.experts.size()},
      {"fingerprint", buffer.fingerprint},
      {"experts", experts},
  };
  detail::write_text_file(dir / "buffer_meta.json", meta.dump(2) + "\n");
}

TrajectoryBuffer load_buffer(const fs::path& dir) {
  const fs::path meta_path = dir / "buffer_meta.json";
  TrajectoryBuffer buffer;
  try {
    const json meta = json::parse(detail::read_text_file(meta_path));
    buffer.arch = parse_arch(meta.at("arch").get<std::string>());
    buffer.hidden = meta.at("hidden").get<int>();
    buffer.k = meta.at("k").get<int>();
    const json& cfg = meta.at("cfg");
    buffer.train.learning_rate = cfg.at("learning_rate").get<double>();
    buffer.train.weight_decay = cfg.at("weight_decay").get<double>();
    buffer.train.epochs = cfg.at("epochs").get<int>();
    buffer.train.optimizer = parse_optimizer(cfg.at("optimizer").get<std::string>());
    buffer.train.seed = cfg.at("seed").get<std::uint64_t>();
    buffer.fingerprint = meta.at("fingerprint").get<std::string>();
    const auto& experts = meta.at("experts");
    if (experts.size() != meta.at("num_experts").get<std::size_t>()) {
      throw FormatError(meta_path.string() + ": num_experts does not match the expert list");
    }
    for (std::size_t e = 0; e < experts.size(); ++e) {
      Trajectory traj;
      traj.seed = experts[e].at("seed").get<std::uint64_t>();
      const auto n = experts[e].at("checkpoints").get<std::size_t>();
      for (std::size_t t = 0; t < n; ++t) {
        Checkpoint ck = load_checkpoint(dir / checkpoint_name(e, t));
        if (ck.epoch != static_cast<int>(t) || ck.params.arch != buffer.arch) {
          throw FormatError((dir / checkpoint_name(e, t)).string() + ": header does not match its position");
        }
        traj.checkpoints.push_back(std::move(ck.params));
      }
      buffer.experts.push_back(std::move(traj));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(meta_path.string() + ": " + e.what());
  }
  buffer.validate();
  return buffer;
}

}  // namespace gcsr
