#include "io_util.hpp"

#include "gcsr/error.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

namespace gcsr::detail {

namespace {

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) {
      r = (r << 8) | (v & 0xffu);
      v >>= 8;
    }
    return r;
  }
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw NumericError("cannot format floating point value");
  return std::string(buf, ptr);
}

double parse_double(std::string_view text, const std::string& context) {
  text = trim(text);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw FormatError(context + ": expected a number, got '" + std::string(text) + "'");
  }
  return value;
}

long long parse_int(std::string_view text, const std::string& context) {
  text = trim(text);
  long long value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw FormatError(context + ": expected an integer, got '" + std::string(text) + "'");
  }
  return value;
}

void write_f64(std::ostream& out, const Matrix& m) {
  std::vector<std::uint64_t> buf(static_cast<std::size_t>(m.size()));
  std::size_t pos = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      buf[pos++] = to_little(std::bit_cast<std::uint64_t>(m(i, j)));
    }
  }
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(std::uint64_t)));
}

void read_f64(std::istream& in, Matrix& m, const std::string& context) {
  std::vector<std::uint64_t> buf(static_cast<std::size_t>(m.size()));
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(std::uint64_t)));
  if (in.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(std::uint64_t))) {
    throw FormatError(context + ": truncated float64 payload");
  }
  std::size_t pos = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      m(i, j) = std::bit_cast<double>(to_little(buf[pos++]));
    }
  }
}

void write_matrix_file(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_f64(out, m);
  if (!out) throw FormatError("write failed: " + path.string());
}

Matrix read_matrix_file(const std::filesystem::path& path, Eigen::Index rows, Eigen::Index cols) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("missing file: " + path.string());
  Matrix m(rows, cols);
  read_f64(in, m, path.string());
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError(path.string() + ": trailing bytes after " + std::to_string(rows) + "x" +
                      std::to_string(cols) + " payload");
  }
  return m;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("missing file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw FormatError("write failed: " + path.string());
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n'))
    s.remove_suffix(1);
  return s;
}

}  // namespace gcsr::detail
