#include "insdvl/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace insdvl {

namespace {

void append_value(std::string& out, double v, bool time_format) {
  char buf[40];
  const int len = time_format ? std::snprintf(buf, sizeof(buf), "%.6f", v)
                              : std::snprintf(buf, sizeof(buf), "%.17g", v);
  out.append(buf, buf + len);
}

}  // namespace

std::string csv_to_string(const std::vector<std::string>& header,
                          const std::vector<std::vector<double>>& rows,
                          bool time_first_column) {
  std::string out;
  for (size_t i = 0; i < header.size(); ++i) {
    if (i) out.push_back(',');
    out += header[i];
  }
  out.push_back('\n');
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out.push_back(',');
      append_value(out, row[i], time_first_column && i == 0);
    }
    out.push_back('\n');
  }
  return out;
}

void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows,
               bool time_first_column) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_csv: cannot open " + path.string());
  const std::string body = csv_to_string(header, rows, time_first_column);
  f.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!f) throw std::runtime_error("write_csv: write failed for " + path.string());
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_csv: cannot open " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(f, line)) {
    throw std::runtime_error("read_csv: empty file " + path.string());
  }
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) table.header.push_back(cell);

  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    row.reserve(table.header.size());
    const char* p = line.data();
    const char* end = p + line.size();
    while (p <= end) {
      const char* comma = p;
      while (comma < end && *comma != ',') ++comma;
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(p, comma, v);
      if (ec != std::errc() || ptr != comma) {
        throw std::runtime_error("read_csv: bad numeric cell in " + path.string());
      }
      row.push_back(v);
      if (comma == end) break;
      p = comma + 1;
    }
    if (row.size() != table.header.size()) {
      throw std::runtime_error("read_csv: ragged row in " + path.string());
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

bool csv_has_nonfinite(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  for (const auto& row : t.rows) {
    for (double v : row) {
      if (!std::isfinite(v)) return true;
    }
  }
  return false;
}

}  // namespace insdvl
