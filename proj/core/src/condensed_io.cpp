#include "gcsr/engine.hpp"
#include "gcsr/error.hpp"
#include "io_util.hpp"

#include <json.hpp>

#include <sstream>

namespace gcsr {

namespace fs = std::filesystem;
using nlohmann::json;

void save_condensed(const CondensedGraph& graph, const fs::path& dir, const std::vector<double>* losses) {
  graph.validate();
  fs::create_directories(dir);
  const json meta = {
      {"num_nodes", graph.num_nodes()},
      {"num_features", graph.features.cols()},
      {"num_classes", graph.labels.per_class_counts.size()},
      {"per_class_counts", graph.labels.per_class_counts},
      {"ratio", graph.ratio},
      {"provenance", graph.provenance},
  };
  detail::write_text_file(dir / "condensed_meta.json", meta.dump(2) + "\n");
  detail::write_matrix_file(dir / "X.bin", graph.features);
  detail::write_matrix_file(dir / "A.bin", graph.adjacency.matrix);
  std::string y;
  for (int label : graph.labels.labels) y += std::to_string(label) + "\n";
  detail::write_text_file(dir / "Y.txt", y);
  if (losses) {
    std::string csv = "iteration,D\n";
    for (std::size_t i = 0; i < losses->size(); ++i) {
      csv += std::to_string(i) + "," + detail::format_double((*losses)[i]) + "\n";
    }
    detail::write_text_file(dir / "loss.csv", csv);
  }
}

CondensedGraph load_condensed(const fs::path& dir) {
  const fs::path meta_path = dir / "condensed_meta.json";
  CondensedGraph graph;
  Eigen::Index n = 0;
  Eigen::Index d = 0;
  try {
    const json meta = json::parse(detail::read_text_file(meta_path));
    n = meta.at("num_nodes").get<Eigen::Index>();
    d = meta.at("num_features").get<Eigen::Index>();
    graph.labels.per_class_counts = meta.at("per_class_counts").get<std::vector<int>>();
    if (graph.labels.per_class_counts.size() != meta.at("num_classes").get<std::size_t>()) {
      throw FormatError(meta_path.string() + ": per_class_counts does not match num_classes");
    }
    graph.ratio = meta.at("ratio").get<double>();
    graph.provenance = meta.at("provenance").get<std::map<std::string, std::string>>();
  } catch (const json::exception& e) {
    throw FormatError(meta_path.string() + ": " + e.what());
  }
  if (n <= 0 || d <= 0) throw FormatError(meta_path.string() + ": sizes must be positive");
  graph.features = detail::read_matrix_file(dir / "X.bin", n, d);
  graph.adjacency.matrix = detail::read_matrix_file(dir / "A.bin", n, n);

  const fs::path y_path = dir / "Y.txt";
  std::istringstream in(detail::read_text_file(y_path));
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    graph.labels.labels.push_back(
        static_cast<int>(detail::parse_int(line, y_path.string() + ":" + std::to_string(lineno))));
  }
  try {
    graph.validate();
  } catch (const ValidationError& e) {
    throw FormatError(dir.string() + ": " + e.what());
  }
  return graph;
}

std::vector<double> load_losses(const fs::path& dir) {
  const fs::path path = dir / "loss.csv";
  std::istringstream in(detail::read_text_file(path));
  std::string line;
  std::vector<double> out;
  std::getline(in, line);
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split(line, ',');
    if (fields.size() != 2) throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected 2 columns");
    out.push_back(detail::parse_double(fields[1], path.string() + ":" + std::to_string(lineno)));
  }
  return out;
}

}  // namespace gcsr
