#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace insdvl {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

/// Write a numeric CSV. When time_first_column is set the first column is
/// rendered with six decimal places; all other values use %.17g so a parse
/// recovers them exactly. Output is byte-deterministic.
void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows,
               bool time_first_column = true);

/// Strict numeric CSV reader for the artifact's own files.
CsvTable read_csv(const std::filesystem::path& path);

/// Serialize to the exact bytes write_csv would produce.
std::string csv_to_string(const std::vector<std::string>& header,
                          const std::vector<std::vector<double>>& rows,
                          bool time_first_column = true);

/// True when any value in the file fails to parse as a finite double.
bool csv_has_nonfinite(const std::filesystem::path& path);

}  // namespace insdvl
