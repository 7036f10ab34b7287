#include "cli.hpp"

#include "gcsr/engine.hpp"
#include "gcsr/error.hpp"
#include "gcsr/evalkit.hpp"
#include "gcsr/graph.hpp"
#include "gcsr/trajectory.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

extern char** environ;

namespace gcsr::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kEnvPrefix = "GCSR_";

struct KeySpec {
  std::string key;
  std::string flag;  // without the leading dashes
  std::string default_value;
  std::string help;
  bool required = false;
};

struct Command {
  std::string name;
  std::string description;
  std::vector<KeySpec> keys;
};

// One key namespace for every subcommand, so a single config file can drive a
// whole pipeline: trajectories write `buffer`, condense reads it and writes
// `condensed`, eval reads that.
const std::vector<Command>& commands() {
  static const std::vector<Command> table = {
      {"trajectories",
       "Train expert models on a dataset and store their checkpoints",
       {
           {"dataset", "dataset", "", "dataset directory", true},
           {"buffer", "out", "", "output trajectory buffer directory", true},
           {"expert_arch", "arch", "sgc", "expert architecture: sgc, gcn or mlp"},
           {"expert_epochs", "epochs", "200", "training epochs per expert"},
           {"experts", "experts", "10", "number of experts"},
           {"expert_lr", "lr", "0.01", "expert learning rate"},
           {"expert_weight_decay", "weight-decay", "0.0005", "expert weight decay"},
           {"expert_optimizer", "optimizer", "adam", "expert optimizer: adam or sgd"},
           {"hidden", "hidden", "256", "hidden width"},
           {"sgc_k", "sgc-k", "2", "SGC propagation order"},
           {"expert_seed", "seed", "0", "seed of the first expert; expert i uses seed + i"},
       }},
      {"condense",
       "Condense a dataset into a small synthetic graph",
       {
           {"dataset", "dataset", "", "dataset directory", true},
           {"buffer", "buffer", "", "trajectory buffer directory", true},
           {"condensed", "out", "", "output directory for the condensed graph", true},
           {"ratio", "ratio", "0.1", "condensation ratio in (0,1)"},
           {"alpha", "alpha", "1", "weight of the structure prior term"},
           {"beta", "beta", "1", "weight of the historical similarity term"},
           {"tau", "tau", "0.95", "bootstrap rate of the prior"},
           {"gamma", "gamma", "0.5", "bootstrap rate of the history"},
           {"inner_steps_n", "inner-steps-n", "20", "student SGD steps per iteration"},
           {"expert_steps_m", "expert-steps-m", "1", "expert epochs spanned by a segment"},
           {"inner_lr", "inner-lr", "0.01", "student learning rate"},
           {"feature_lr", "feature-lr", "0.001", "Adam learning rate for the synthetic features"},
           {"k", "k", "2", "propagation order of the feature initialization"},
           {"iters", "iters", "200", "outer iterations"},
           {"seed", "seed", "0", "condensation seed"},
           {"structure", "structure", "self-expressive", "structure model: self-expressive or identity"},
           {"sparsify_threshold", "sparsify-threshold", "0", "zero A' entries below this value (0 = off)"},
           {"t_min", "t-min", "0", "earliest segment start epoch"},
           {"t_max", "t-max", "-1", "latest segment start epoch (-1 = no limit)"},
       }},
      {"eval",
       "Train test models on a condensed graph and score them on the original graph",
       {
           {"condensed", "condensed", "", "condensed graph directory", true},
           {"dataset", "dataset", "", "dataset directory", true},
           {"eval_arch", "arch", "gcn", "test architecture: sgc, gcn or mlp"},
           {"repeats", "repeats", "10", "independent test runs"},
           {"eval_epochs", "epochs", "600", "training epochs per run"},
           {"eval_lr", "lr", "0.01", "test learning rate"},
           {"eval_weight_decay", "weight-decay", "0.0005", "test weight decay"},
           {"hidden", "hidden", "256", "hidden width"},
           {"sgc_k", "sgc-k", "2", "SGC propagation order"},
           {"eval_seed", "seed", "0", "seed of the first run; run r uses seed + r"},
           {"eval_out", "out", "", "output directory (default: the condensed directory)"},
       }},
      {"metrics",
       "Compute CCNS or silhouette for a dataset or condensed graph",
       {
           {"metrics_input", "input", "", "dataset or condensed graph directory", true},
           {"metrics_out", "out", "", "optional directory for JSON and CSV output"},
       }},
      {"baseline",
       "Build a baseline condensed graph",
       {
           {"dataset", "dataset", "", "dataset directory", true},
           {"baseline_out", "out", "", "output directory", true},
           {"ratio", "ratio", "0.1", "condensation ratio in (0,1)"},
           {"seed", "seed", "0", "sampling seed"},
       }},
  };
  return table;
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = [] {
    std::set<std::string> out;
    for (const auto& c : commands())
      for (const auto& k : c.keys) out.insert(k.key);
    return out;
  }();
  return keys;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::map<std::string, std::string> read_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read config file " + path.string());
  std::map<std::string, std::string> values;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    const std::string body = trim(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw FormatError(where + ": expected 'key = value'");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (!known_keys().contains(key)) throw ValidationError(where + ": unknown config key '" + key + "'");
    if (!values.emplace(key, value).second) throw ValidationError(where + ": duplicate config key '" + key + "'");
  }
  return values;
}

// GCSR_FEATURE_LR -> feature_lr
std::map<std::string, std::string> read_environment(const Environment& env) {
  std::map<std::string, std::string> values;
  const std::string prefix = kEnvPrefix;
  for (const auto& [name, value] : env) {
    if (name.rfind(prefix, 0) != 0) continue;
    std::string key = name.substr(prefix.size());
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
    if (!known_keys().contains(key)) throw ValidationError("unknown environment variable " + name);
    values[key] = value;
  }
  return values;
}

class Values {
 public:
  explicit Values(std::map<std::string, std::string> resolved) : v_(std::move(resolved)) {}

  const std::string& str(const std::string& key) const { return v_.at(key); }
  bool has(const std::string& key) const { return !v_.at(key).empty(); }

  double real(const std::string& key) const {
    const std::string& s = str(key);
    double out = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || p != s.data() + s.size()) bad(key);
    return out;
  }

  long long integer(const std::string& key) const {
    const std::string& s = str(key);
    long long out = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || p != s.data() + s.size()) bad(key);
    return out;
  }

  int small_int(const std::string& key) const {
    const long long v = integer(key);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) bad(key);
    return static_cast<int>(v);
  }

  std::uint64_t seed(const std::string& key) const {
    const std::string& s = str(key);
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || p != s.data() + s.size()) bad(key);
    return out;
  }

  const std::map<std::string, std::string>& all() const { return v_; }

 private:
  [[noreturn]] void bad(const std::string& key) const {
    throw ValidationError("invalid value for " + key + ": '" + str(key) + "'");
  }

  std::map<std::string, std::string> v_;
};

void echo_config(const fs::path& dir, const std::string& command, const Values& values) {
  fs::create_directories(dir);
  std::ofstream out(dir / (command + ".resolved.conf"));
  out << "# gcsr " << command << "\n";
  for (const auto& [k, v] : values.all()) out << k << " = " << v << "\n";
  if (!out) throw std::runtime_error("cannot write resolved config into " + dir.string());
}

int run_trajectories(const Values& v, std::ostream& out, std::ostream& err) {
  const GraphDataset dataset = load_dataset(v.str("dataset"));
  TrainConfig cfg;
  cfg.learning_rate = v.real("expert_lr");
  cfg.weight_decay = v.real("expert_weight_decay");
  cfg.epochs = v.small_int("expert_epochs");
  cfg.optimizer = parse_optimizer(v.str("expert_optimizer"));
  cfg.seed = v.seed("expert_seed");
  const int experts = v.small_int("experts");
  const int hidden = v.small_int("hidden");
  if (hidden < 1) throw ValidationError("hidden must be >= 1");
  err << "training " << experts << " experts for " << cfg.epochs << " epochs\n";
  const TrajectoryBuffer buffer = generate_expert_trajectories(dataset, parse_arch(v.str("expert_arch")), cfg, experts,
                                                               hidden, v.small_int("sgc_k"));
  const fs::path dir = v.str("buffer");
  save_buffer(buffer, dir);
  echo_config(dir, "trajectories", v);
  out << "wrote " << buffer.experts.size() << " trajectories to " << dir.string() << "\n";
  return 0;
}

int run_condense(const Values& v, std::ostream& out, std::ostream& err) {
  CondenseConfig cfg;
  cfg.ratio = v.real("ratio");
  cfg.alpha = v.real("alpha");
  cfg.beta = v.real("beta");
  cfg.tau = v.real("tau");
  cfg.gamma = v.real("gamma");
  cfg.inner_steps = v.small_int("inner_steps_n");
  cfg.expert_steps = v.small_int("expert_steps_m");
  cfg.inner_lr = v.real("inner_lr");
  cfg.feature_lr = v.real("feature_lr");
  cfg.k = v.small_int("k");
  cfg.outer_iterations = v.small_int("iters");
  cfg.seed = v.seed("seed");
  cfg.structure = parse_structure(v.str("structure"));
  cfg.sparsify_threshold = v.real("sparsify_threshold");
  cfg.t_min = v.small_int("t_min");
  cfg.t_max = v.small_int("t_max");
  cfg.validate();

  const GraphDataset dataset = load_dataset(v.str("dataset"));
  const TrajectoryBuffer buffer = load_buffer(v.str("buffer"));
  const int every = std::max(1, cfg.outer_iterations / 10);
  const CondenseResult result = condense(dataset, buffer, cfg, [&](int it, double loss) {
    if ((it + 1) % every == 0) err << "iteration " << it + 1 << "/" << cfg.outer_iterations << "  D = " << loss << "\n";
  });
  const fs::path dir = v.str("condensed");
  save_condensed(result.graph, dir, &result.losses);
  echo_config(dir, "condense", v);
  out << "wrote a " << result.graph.num_nodes() << "-node condensed graph to " << dir.string() << "\n";
  return 0;
}

int run_eval(const Values& v, std::ostream& out, std::ostream& err) {
  const CondensedGraph condensed = load_condensed(v.str("condensed"));
  const GraphDataset dataset = load_dataset(v.str("dataset"));
  TestStageConfig cfg;
  cfg.arch = parse_arch(v.str("eval_arch"));
  cfg.repeats = v.small_int("repeats");
  cfg.epochs = v.small_int("eval_epochs");
  cfg.learning_rate = v.real("eval_lr");
  cfg.weight_decay = v.real("eval_weight_decay");
  cfg.hidden = v.small_int("hidden");
  cfg.k = v.small_int("sgc_k");
  cfg.seed = v.seed("eval_seed");
  if (cfg.epochs < 1) throw ValidationError("epochs must be >= 1");
  if (cfg.hidden < 1) throw ValidationError("hidden must be >= 1");

  const AccuracyReport report = test_stage(condensed, dataset, cfg);
  if (report.runs.empty()) throw NumericError("every test-stage run diverged");
  std::optional<CcnsMatrix> c;
  try {
    c = ccns(condensed.adjacency.matrix, condensed.labels.labels, dataset.num_classes);
  } catch (const ValidationError& e) {
    err << "warning: CCNS not reported: " << e.what() << "\n";
  }
  std::optional<double> sil;
  try {
    sil = silhouette(condensed.features, condensed.labels.labels);
  } catch (const ValidationError& e) {
    err << "warning: silhouette not reported: " << e.what() << "\n";
  }
  const std::string json = metrics_json(&report, c ? &*c : nullptr, sil ? &*sil : nullptr, v.all());
  const fs::path dir = v.has("eval_out") ? fs::path(v.str("eval_out")) : fs::path(v.str("condensed"));
  fs::create_directories(dir);
  std::ofstream(dir / "metrics.json") << json << "\n";
  if (c) write_ccns_csv(dir / "ccns.csv", *c);
  write_features_csv(dir / "features.csv", condensed.features, condensed.labels.labels);
  echo_config(dir, "eval", v);
  out << json << "\n";
  return 0;
}

int run_metrics(const std::string& kind, const Values& v, std::ostream& out) {
  const fs::path input = v.str("metrics_input");
  Matrix features;
  Labels labels;
  int num_classes = 0;
  std::optional<CcnsMatrix> c;
  if (fs::exists(input / "condensed_meta.json")) {
    const CondensedGraph g = load_condensed(input);
    num_classes = g.labels.num_classes();
    if (kind == "ccns") c = ccns(g.adjacency.matrix, g.labels.labels, num_classes);
    features = g.features;
    labels = g.labels.labels;
  } else {
    const GraphDataset ds = load_dataset(input);
    num_classes = ds.num_classes;
    if (kind == "ccns") c = ccns(ds.adjacency, ds.labels, num_classes);
    features = ds.features;
    labels = ds.labels;
  }
  std::optional<double> sil;
  if (kind == "silhouette") sil = silhouette(features, labels);
  auto config = v.all();
  config["metric"] = kind;
  const std::string json = metrics_json(nullptr, c ? &*c : nullptr, sil ? &*sil : nullptr, config);
  if (v.has("metrics_out")) {
    const fs::path dir = v.str("metrics_out");
    fs::create_directories(dir);
    std::ofstream(dir / ("metrics_" + kind + ".json")) << json << "\n";
    if (c) write_ccns_csv(dir / "ccns.csv", *c);
    if (sil) write_features_csv(dir / "features.csv", features, labels);
    echo_config(dir, "metrics", v);
  }
  out << json << "\n";
  return 0;
}

int run_baseline(const Values& v, std::ostream& out) {
  const GraphDataset dataset = load_dataset(v.str("dataset"));
  const CondensedGraph g = random_coreset(dataset, v.real("ratio"), v.seed("seed"));
  const fs::path dir = v.str("baseline_out");
  save_condensed(g, dir);
  echo_config(dir, "baseline", v);
  out << "wrote a " << g.num_nodes() << "-node random coreset to " << dir.string() << "\n";
  return 0;
}

}  // namespace

Environment process_environment() {
  Environment env;
  for (char** e = environ; e && *e; ++e) {
    const std::string entry = *e;
    const auto eq = entry.find('=');
    if (eq != std::string::npos) env.emplace(entry.substr(0, eq), entry.substr(eq + 1));
  }
  return env;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const Environment& env) {
  CLI::App app{"gcsr: graph condensation via self-expressive structure reconstruction", "gcsr"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "gcsr 0.1.0");

  std::map<std::string, std::map<std::string, std::string>> flag_values;
  std::map<std::string, std::string> config_paths;
  std::map<std::string, CLI::App*> subs;
  std::string metric_kind;
  std::string baseline_method;

  for (const Command& cmd : commands()) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.description);
    subs[cmd.name] = sub;
    sub->add_option("--config", config_paths[cmd.name], "flat 'key = value' config file");
    for (const KeySpec& k : cmd.keys) {
      std::string help = k.help + "  [key: " + k.key;
      if (!k.default_value.empty()) help += ", default: " + k.default_value;
      if (k.required) help += ", required";
      help += "]";
      sub->add_option("--" + k.flag, flag_values[cmd.name][k.key], help);
    }
  }
  subs["metrics"]->add_option("kind", metric_kind, "ccns or silhouette")->required()->check(
      CLI::IsMember({"ccns", "silhouette"}));
  subs["baseline"]->add_option("method", baseline_method, "baseline method (random)")->required()->check(
      CLI::IsMember({"random"}));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 1;
  }

  try {
    const Command* cmd = nullptr;
    for (const Command& c : commands())
      if (subs[c.name]->parsed()) cmd = &c;
    if (cmd == nullptr) throw ValidationError("no subcommand given");

    const auto env_values = read_environment(env);
    std::map<std::string, std::string> file_values;
    if (!config_paths[cmd->name].empty()) file_values = read_config_file(config_paths[cmd->name]);

    std::map<std::string, std::string> resolved;
    for (const KeySpec& k : cmd->keys) {
      const CLI::Option* opt = subs[cmd->name]->get_option("--" + k.flag);
      std::string value = k.default_value;
      if (opt->count() > 0) {
        value = flag_values[cmd->name][k.key];
      } else if (auto it = env_values.find(k.key); it != env_values.end()) {
        value = it->second;
      } else if (auto jt = file_values.find(k.key); jt != file_values.end()) {
        value = jt->second;
      }
      if (k.required && value.empty()) throw ValidationError("missing required option --" + k.flag);
      resolved[k.key] = value;
    }
    const Values values(std::move(resolved));

    if (cmd->name == "trajectories") return run_trajectories(values, out, err);
    if (cmd->name == "condense") return run_condense(values, out, err);
    if (cmd->name == "eval") return run_eval(values, out, err);
    if (cmd->name == "metrics") return run_metrics(metric_kind, values, out);
    return run_baseline(values, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace gcsr::cli
