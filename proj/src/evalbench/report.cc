#include "decsde/evalbench/report.h"

#include <cstdio>
#include <fstream>

#include "decsde/common/error.h"

namespace decsde::evalbench {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

}  // namespace

std::string csv_line(const Row& fields) {
  std::string line;
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) line.push_back(',');
    const auto& f = fields[i];
    if (f.find_first_of(",\"\n\r") == std::string::npos) {
      line += f;
      continue;
    }
    line.push_back('"');
    for (char c : f) {
      if (c == '"') line.push_back('"');
      line.push_back(c);
    }
    line.push_back('"');
  }
  return line;
}

void write_csv(const std::filesystem::path& path, const Row& header, const std::vector<Row>& rows) {
  auto out = open_out(path);
  out << csv_line(header) << '\n';
  for (const auto& r : rows) out << csv_line(r) << '\n';
}

void write_gnuplot(const std::filesystem::path& path, const Row& header, const std::vector<Row>& rows) {
  auto out = open_out(path);
  out << '#';
  for (const auto& h : header) out << ' ' << h;
  out << '\n';
  for (const auto& r : rows) {
    for (size_t i = 0; i < r.size(); ++i) {
      if (r[i].find_first_of(" \t") != std::string::npos) throw ContractError("gnuplot field with whitespace");
      out << (i ? " " : "") << r[i];
    }
    out << '\n';
  }
}

std::string fmt(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, value);
  return buf;
}

}  // namespace decsde::evalbench
