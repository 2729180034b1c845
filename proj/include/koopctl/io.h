#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "koopctl/linalg.h"

namespace koopctl {

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);
double parse_double(const std::string& s);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Whitespace separated columns, one row per line, optional '#' header.
void write_dat(const std::filesystem::path& path, const Matrix& rows,
               const std::string& header = "");
Matrix read_dat(const std::filesystem::path& path);

/// FNV-1a 64-bit digest rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace koopctl
