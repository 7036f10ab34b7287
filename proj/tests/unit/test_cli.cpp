#include "cli.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using gcsr::cli::Environment;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result gcsr_run(std::vector<std::string> args, const Environment& env = {}) {
  std::ostringstream out, err;
  const int code = gcsr::cli::run(args, out, err, env);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("gcsr_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string kToy = GCSR_TOY_DATA;

// Small buffer shared by several cases.
fs::path toy_buffer() {
  static const fs::path dir = [] {
    const fs::path d = fresh_dir("shared") / "buffer";
    const Result r = gcsr_run({"trajectories", "--dataset", kToy, "--out", d.string(), "--epochs", "30", "--experts", "3",
                               "--hidden", "32"});
    REQUIRE(r.code == 0);
    return d;
  }();
  return dir;
}

std::set<std::string> listing(const fs::path& dir) {
  std::set<std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) out.insert(fs::relative(e.path(), dir).string());
  return out;
}

}  // namespace

TEST_CASE("condense --help lists every flag") {
  const Result r = gcsr_run({"condense", "--help"});
  CHECK(r.code == 0);
  for (const char* flag : {"--dataset", "--buffer", "--ratio", "--out", "--alpha", "--beta", "--tau", "--gamma",
                           "--inner-steps-n", "--expert-steps-m", "--feature-lr", "--k", "--iters", "--seed"}) {
    CAPTURE(flag);
    CHECK(r.out.find(flag) != std::string::npos);
  }
}

TEST_CASE("out-of-range ratio is a validation error") {
  const fs::path dir = fresh_dir("ratio");
  const Result r = gcsr_run({"condense", "--dataset", kToy, "--buffer", toy_buffer().string(), "--ratio", "1.5", "--out",
                             (dir / "out").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("ratio must be in (0,1)") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "out"));
}

TEST_CASE("usage errors exit with 1") {
  CHECK(gcsr_run({}).code == 1);
  CHECK(gcsr_run({"frobnicate"}).code == 1);
  CHECK(gcsr_run({"condense", "--no-such-flag", "1"}).code == 1);
  const Result missing = gcsr_run({"eval", "--dataset", kToy});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("--condensed") != std::string::npos);
  const Result bad_number = gcsr_run({"condense", "--dataset", kToy, "--buffer", toy_buffer().string(), "--out",
                                      fresh_dir("badnum").string(), "--alpha", "x1"});
  CHECK(bad_number.code == 1);
  CHECK(bad_number.err.find("alpha") != std::string::npos);
}

TEST_CASE("missing input files name the file") {
  const fs::path dir = fresh_dir("missing");
  const Result r = gcsr_run({"trajectories", "--dataset", (dir / "nothing").string(), "--out", (dir / "b").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("meta.json") != std::string::npos);
}

TEST_CASE("numeric failure exits with 2") {
  const fs::path dir = fresh_dir("diverge");
  const Result r = gcsr_run({"condense", "--dataset", kToy, "--buffer", toy_buffer().string(), "--out",
                             (dir / "c").string(), "--ratio", "0.3", "--iters", "3", "--inner-lr", "1e305"});
  CHECK(r.code == 2);
  CHECK(r.err.find("diverged") != std::string::npos);
}

TEST_CASE("toy pipeline produces a complete metrics report") {
  const fs::path dir = fresh_dir("pipeline");
  const fs::path buffer = dir / "buffer";
  const fs::path cond = dir / "condensed";
  REQUIRE(gcsr_run({"trajectories", "--dataset", kToy, "--out", buffer.string()}).code == 0);
  REQUIRE(gcsr_run({"condense", "--dataset", kToy, "--buffer", buffer.string(), "--ratio", "0.3", "--iters", "20",
                    "--out", cond.string()})
              .code == 0);
  const Result r = gcsr_run({"eval", "--condensed", cond.string(), "--dataset", kToy, "--repeats", "3"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(slurp(cond / "metrics.json"));
  CHECK(j.at("accuracy").at("runs").size() == 3);
  CHECK(j.at("accuracy").contains("mean"));
  CHECK(j.at("accuracy").contains("std"));
  CHECK(j.at("ccns").size() == 3);
  CHECK(j.at("silhouette").is_number());
  CHECK(j.at("config").at("repeats") == "3");
  CHECK(nlohmann::json::parse(r.out) == j);
  CHECK(fs::exists(cond / "ccns.csv"));
  CHECK(fs::exists(cond / "features.csv"));
  CHECK(fs::exists(cond / "loss.csv"));
  CHECK(fs::exists(buffer / "trajectories.resolved.conf"));
  CHECK(fs::exists(cond / "condense.resolved.conf"));
  CHECK(fs::exists(cond / "eval.resolved.conf"));
}

TEST_CASE("echoed config reproduces a run bit for bit") {
  const fs::path dir = fresh_dir("echo");
  REQUIRE(gcsr_run({"condense", "--dataset", kToy, "--buffer", toy_buffer().string(), "--ratio", "0.3", "--iters", "5",
                    "--seed", "4", "--alpha", "3", "--out", (dir / "a").string()})
              .code == 0);
  const fs::path conf = dir / "a" / "condense.resolved.conf";
  REQUIRE(gcsr_run({"condense", "--config", conf.string(), "--out", (dir / "b").string()}).code == 0);
  for (const char* f : {"X.bin", "A.bin", "Y.txt", "loss.csv", "condensed_meta.json"}) {
    CAPTURE(f);
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }
}

TEST_CASE("precedence: flag over environment over file over default") {
  const fs::path dir = fresh_dir("precedence");
  {
    std::ofstream conf(dir / "run.conf");
    conf << "# comment\n"
         << "dataset = " << kToy << "\n"
         << "buffer = " << toy_buffer().string() << "\n"
         << "ratio = 0.3\n"
         << "iters = 2\n"
         << "alpha = 5\n"
         << "beta = 6\n"
         << "tau = 0.9\n";
  }
  const Environment env{{"GCSR_BETA", "7"}, {"GCSR_TAU", "0.91"}, {"HOME", "/root"}};
  const Result r = gcsr_run({"condense", "--config", (dir / "run.conf").string(), "--out", (dir / "c").string(),
                             "--tau", "0.92"},
                            env);
  REQUIRE(r.code == 0);
  const auto meta = nlohmann::json::parse(slurp(dir / "c" / "condensed_meta.json"));
  const auto& prov = meta.at("provenance");
  CHECK(prov.at("alpha") == "5");     // file
  CHECK(prov.at("beta") == "7");      // environment beats file
  CHECK(prov.at("tau") == "0.92");    // flag beats environment
  CHECK(prov.at("gamma") == "0.5");   // default
  CHECK(prov.at("iters") == "2");
}

TEST_CASE("unknown keys are rejected by name") {
  const fs::path dir = fresh_dir("unknown");
  {
    std::ofstream conf(dir / "bad.conf");
    conf << "dataset = " << kToy << "\nlearning_rate_typo = 3\n";
  }
  const Result file = gcsr_run({"baseline", "random", "--config", (dir / "bad.conf").string(), "--out",
                                (dir / "o").string()});
  CHECK(file.code == 1);
  CHECK(file.err.find("learning_rate_typo") != std::string::npos);

  const Result env = gcsr_run({"baseline", "random", "--dataset", kToy, "--out", (dir / "o").string()},
                              {{"GCSR_RATIOO", "0.2"}});
  CHECK(env.code == 1);
  CHECK(env.err.find("GCSR_RATIOO") != std::string::npos);
}

TEST_CASE("baseline and metrics subcommands") {
  const fs::path dir = fresh_dir("baseline");
  const Result b = gcsr_run({"baseline", "random", "--dataset", kToy, "--ratio", "0.3", "--out", (dir / "rc").string()});
  REQUIRE(b.code == 0);
  CHECK(fs::exists(dir / "rc" / "X.bin"));

  const Result c = gcsr_run({"metrics", "ccns", "--input", kToy});
  REQUIRE(c.code == 0);
  const auto cj = nlohmann::json::parse(c.out);
  CHECK(cj.at("ccns").size() == 3);

  const Result s = gcsr_run({"metrics", "silhouette", "--input", (dir / "rc").string(), "--out", (dir / "m").string()});
  REQUIRE(s.code == 0);
  CHECK(nlohmann::json::parse(s.out).at("silhouette").is_number());
  CHECK(fs::exists(dir / "m" / "metrics_silhouette.json"));
  CHECK(fs::exists(dir / "m" / "features.csv"));

  CHECK(gcsr_run({"metrics", "entropy", "--input", kToy}).code == 1);
}

TEST_CASE("subcommands write only inside their output directory") {
  const fs::path dir = fresh_dir("confined");
  const fs::path buffer = dir / "buffer";
  const fs::path cond = dir / "cond";
  const fs::path evald = dir / "eval";
  const auto before = listing(fs::path(kToy));
  REQUIRE(gcsr_run({"trajectories", "--dataset", kToy, "--out", buffer.string(), "--epochs", "5", "--experts", "2",
                    "--hidden", "8"})
              .code == 0);
  std::set<std::string> top;
  for (const auto& e : fs::directory_iterator(dir)) top.insert(e.path().filename().string());
  CHECK(top == std::set<std::string>{"buffer"});

  REQUIRE(gcsr_run({"condense", "--dataset", kToy, "--buffer", buffer.string(), "--ratio", "0.3", "--iters", "2",
                    "--out", cond.string()})
              .code == 0);
  const auto buffer_files = listing(buffer);
  REQUIRE(gcsr_run({"eval", "--condensed", cond.string(), "--dataset", kToy, "--repeats", "1", "--epochs", "5",
                    "--out", evald.string()})
              .code == 0);
  top.clear();
  for (const auto& e : fs::directory_iterator(dir)) top.insert(e.path().filename().string());
  CHECK(top == std::set<std::string>{"buffer", "cond", "eval"});
  CHECK(listing(buffer) == buffer_files);
  CHECK_FALSE(fs::exists(cond / "metrics.json"));
  CHECK(listing(fs::path(kToy)) == before);
}
