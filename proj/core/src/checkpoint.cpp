#include "gcsr/error.hpp"
#include "gcsr/models.hpp"
#include "io_util.hpp"

#include <json.hpp>

#include <fstream>
#include <string>

namespace gcsr {

using nlohmann::json;

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  json shapes = json::array();
  for (const auto& w : ckpt.params.layers) shapes.push_back({w.rows(), w.cols()});
  const json header = {{"arch", std::string(to_string(ckpt.params.arch))},
                       {"shapes", shapes},
                       {"epoch", ckpt.epoch},
                       {"seed", ckpt.seed}};
  out << header.dump() << '\n';
  for (const auto& w : ckpt.params.layers) detail::write_f64(out, w);
}

Checkpoint read_checkpoint(std::istream& in, const std::string& context) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError(context + ": missing checkpoint header");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw FormatError(context + ": invalid checkpoint header (" + e.what() + ")");
  }
  Checkpoint ckpt;
  try {
    ckpt.params.arch = parse_arch(header.at("arch").get<std::string>());
    ckpt.epoch = header.at("epoch").get<int>();
    ckpt.seed = header.at("seed").get<std::uint64_t>();
    for (const auto& shape : header.at("shapes")) {
      const auto rows = shape.at(0).get<Eigen::Index>();
      const auto cols = shape.at(1).get<Eigen::Index>();
      if (rows <= 0 || cols <= 0) throw FormatError(context + ": non-positive layer shape");
      Matrix w(rows, cols);
      detail::read_f64(in, w, context);
      ckpt.params.layers.push_back(std::move(w));
    }
  } catch (const json::exception& e) {
    throw FormatError(context + ": malformed checkpoint header (" + e.what() + ")");
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_checkpoint(out, ckpt);
  if (!out) throw FormatError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("missing file: " + path.string());
  Checkpoint ckpt = read_checkpoint(in, path.string());
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError(path.string() + ": trailing bytes");
  return ckpt;
}

}  // namespace gcsr
