#include "koopctl/io.h"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "koopctl/errors.h"

namespace koopctl {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  size_t e = s.find_last_not_of(" \t\r\n");
  if (b == std::string::npos) throw IoError("empty numeric field");
  double v = 0.0;
  auto res = std::from_chars(s.data() + b, s.data() + e + 1, v);
  if (res.ec != std::errc() || res.ptr != s.data() + e + 1) {
    throw IoError("cannot parse number '" + s + "'");
  }
  return v;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

Json read_json_file(const std::filesystem::path& path) {
  try {
    return Json::parse(read_text_file(path));
  } catch (const Json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

void write_dat(const std::filesystem::path& path, const Matrix& rows, const std::string& header) {
  std::ostringstream out;
  if (!header.empty()) out << "# " << header << "\n";
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < rows.cols(); ++j) {
      if (j) out << ' ';
      out << format_double(rows(i, j));
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

Matrix read_dat(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::vector<std::vector<double>> data;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::vector<double> row;
    std::string tok;
    while (ls >> tok) row.push_back(tok == "nan" ? std::nan("") : parse_double(tok));
    if (!row.empty()) data.push_back(std::move(row));
  }
  if (data.empty()) return Matrix(0, 0);
  Matrix m(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(data[0].size()));
  for (size_t i = 0; i < data.size(); ++i) {
    if (data[i].size() != data[0].size()) throw IoError(path.string() + ": ragged rows");
    for (size_t j = 0; j < data[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = data[i][j];
    }
  }
  return m;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace koopctl
