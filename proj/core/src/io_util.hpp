#pragma once

// Small helpers shared by the on-disk formats. Not installed.

#include "gcsr/types.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace gcsr::detail {

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text, const std::string& context);
long long parse_int(std::string_view text, const std::string& context);

// Row-major little-endian float64 payloads.
void write_f64(std::ostream& out, const Matrix& m);
void read_f64(std::istream& in, Matrix& m, const std::string& context);
void write_matrix_file(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix_file(const std::filesystem::path& path, Eigen::Index rows, Eigen::Index cols);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

std::vector<std::string_view> split(std::string_view line, char sep);
std::string_view trim(std::string_view s);

}  // namespace gcsr::detail
