#pragma once

// Comma-separated tables with a one-line provenance comment.
//
//   # experiment_spec={...}
//   col_a,col_b
//   1,2

#include <filesystem>
#include <string>
#include <vector>

namespace spinsim {

/// Shortest round-trip text for a double ("%.17g").
std::string format_double(double v);

struct CsvTable {
  std::string comment;  // text after "# " on the first line, empty if absent
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t column_index(const std::string& name) const;
  std::vector<double> numeric_column(const std::string& name) const;
  bool has_column(const std::string& name) const;
};

void write_csv(const std::filesystem::path& path, const CsvTable& table);

/// Throws std::runtime_error on I/O failure, an empty file, or ragged rows.
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace spinsim
