#include "gcsr/graph.hpp"

#include "gcsr/error.hpp"
#include "io_util.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <filesystem>
#include <memory>
#include <sstream>

namespace gcsr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json parse_json_file(const fs::path& path) {
  const std::string text = detail::read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": invalid JSON (" + e.what() + ")");
  }
}

template <typename T>
T json_field(const json& j, const char* key, const fs::path& path) {
  if (!j.contains(key)) throw FormatError(path.string() + ": missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw FormatError(path.string() + ": key '" + key + "' has the wrong type");
  }
}

NodeList read_split(const json& masks, const char* key, const fs::path& path) {
  NodeList nodes = json_field<NodeList>(masks, key, path);
  std::sort(nodes.begin(), nodes.end());
  return nodes;
}

}  // namespace

GraphDataset load_dataset(const fs::path& dir) {
  const fs::path meta_path = dir / "meta.json";
  const json meta = parse_json_file(meta_path);
  const int n = json_field<int>(meta, "num_nodes", meta_path);
  const int d = json_field<int>(meta, "num_features", meta_path);
  const int c = json_field<int>(meta, "num_classes", meta_path);
  const Mode mode = parse_mode(json_field<std::string>(meta, "mode", meta_path));
  if (n <= 0 || d <= 0 || c <= 0) throw FormatError(meta_path.string() + ": sizes must be positive");

  const fs::path edge_path = dir / "edges.tsv";
  std::vector<Edge> edges;
  {
    std::istringstream in(detail::read_text_file(edge_path));
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto body = detail::trim(line);
      if (body.empty()) continue;
      const auto fields = detail::split(body, '\t');
      const std::string ctx = edge_path.string() + ":" + std::to_string(lineno);
      if (fields.size() != 2) throw FormatError(ctx + ": expected 'u<TAB>v'");
      edges.emplace_back(static_cast<int>(detail::parse_int(fields[0], ctx)),
                         static_cast<int>(detail::parse_int(fields[1], ctx)));
    }
  }

  const fs::path feat_path = dir / "features.csv";
  Matrix features(n, d);
  {
    std::istringstream in(detail::read_text_file(feat_path));
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
      if (detail::trim(line).empty()) continue;
      const std::string ctx = feat_path.string() + ":" + std::to_string(row + 1);
      if (row >= n) throw FormatError(ctx + ": more than " + std::to_string(n) + " rows");
      const auto fields = detail::split(detail::trim(line), ',');
      if (static_cast<int>(fields.size()) != d) {
        throw FormatError(ctx + ": expected " + std::to_string(d) + " columns, got " +
                          std::to_string(fields.size()));
      }
      for (int j = 0; j < d; ++j) features(row, j) = detail::parse_double(fields[static_cast<std::size_t>(j)], ctx);
      ++row;
    }
    if (row != n) throw FormatError(feat_path.string() + ": expected " + std::to_string(n) + " rows, got " + std::to_string(row));
  }

  const fs::path label_path = dir / "labels.txt";
  Labels labels;
  {
    std::istringstream in(detail::read_text_file(label_path));
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (detail::trim(line).empty()) continue;
      labels.push_back(static_cast<int>(
          detail::parse_int(line, label_path.string() + ":" + std::to_string(lineno))));
    }
    if (static_cast<int>(labels.size()) != n) {
      throw FormatError(label_path.string() + ": expected " + std::to_string(n) + " labels, got " +
                        std::to_string(labels.size()));
    }
  }

  const fs::path mask_path = dir / "masks.json";
  const json masks = parse_json_file(mask_path);
  Splits splits{read_split(masks, "train", mask_path), read_split(masks, "val", mask_path),
                read_split(masks, "test", mask_path)};

  return make_dataset(edges, std::move(features), std::move(labels), c, std::move(splits), mode);
}

void save_dataset(const GraphDataset& dataset, const fs::path& dir) {
  fs::create_directories(dir);
  json meta = {{"num_nodes", dataset.num_nodes()},
               {"num_features", dataset.num_features()},
               {"num_classes", dataset.num_classes},
               {"mode", std::string(to_string(dataset.mode))}};
  detail::write_text_file(dir / "meta.json", meta.dump(2) + "\n");

  std::string edges;
  for (int i = 0; i < dataset.num_nodes(); ++i) {
    for (SparseMatrix::InnerIterator it(dataset.adjacency, i); it; ++it) {
      if (it.col() > i) edges += std::to_string(i) + "\t" + std::to_string(it.col()) + "\n";
    }
  }
  detail::write_text_file(dir / "edges.tsv", edges);

  std::string feats;
  for (Eigen::Index i = 0; i < dataset.features.rows(); ++i) {
    for (Eigen::Index j = 0; j < dataset.features.cols(); ++j) {
      if (j > 0) feats += ',';
      feats += detail::format_double(dataset.features(i, j));
    }
    feats += '\n';
  }
  detail::write_text_file(dir / "features.csv", feats);

  std::string labels;
  for (int y : dataset.labels) labels += std::to_string(y) + "\n";
  detail::write_text_file(dir / "labels.txt", labels);

  json masks = {{"train", dataset.train}, {"val", dataset.val}, {"test", dataset.test}};
  detail::write_text_file(dir / "masks.json", masks.dump() + "\n");
}

namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
      throw NumericError("SHA-256 initialisation failed");
    }
  }

  void update(const void* data, std::size_t size) { EVP_DigestUpdate(ctx_.get(), data, size); }

  void update_i64(std::int64_t v) {
    auto u = static_cast<std::uint64_t>(v);
    unsigned char bytes[8];
    for (unsigned char& b : bytes) {
      b = static_cast<unsigned char>(u & 0xffu);
      u >>= 8;
    }
    update(bytes, sizeof(bytes));
  }

  void update_f64(double v) { update_i64(std::bit_cast<std::int64_t>(v)); }

  std::string hex() {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_.get(), digest, &len);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out += kHex[digest[i] >> 4];
      out += kHex[digest[i] & 0xf];
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace

std::string fingerprint(const GraphDataset& dataset) {
  Sha256 h;
  h.update("gcsr-dataset-v1", 15);
  h.update_i64(dataset.num_nodes());
  h.update_i64(dataset.num_features());
  h.update_i64(dataset.num_classes);
  h.update_i64(dataset.mode == Mode::Transductive ? 0 : 1);
  for (int i = 0; i < dataset.num_nodes(); ++i) {
    for (SparseMatrix::InnerIterator it(dataset.adjacency, i); it; ++it) {
      if (it.col() > i) {
        h.update_i64(i);
        h.update_i64(it.col());
      }
    }
  }
  h.update_i64(-1);
  for (Eigen::Index i = 0; i < dataset.features.rows(); ++i) {
    for (Eigen::Index j = 0; j < dataset.features.cols(); ++j) h.update_f64(dataset.features(i, j));
  }
  for (int y : dataset.labels) h.update_i64(y);
  for (const NodeList* split : {&dataset.train, &dataset.val, &dataset.test}) {
    h.update_i64(static_cast<std::int64_t>(split->size()));
    for (int i : *split) h.update_i64(i);
  }
  return h.hex();
}

}  // namespace gcsr
