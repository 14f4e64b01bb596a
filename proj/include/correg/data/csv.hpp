#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace correg::data {

// Minimal CSV: UTF-8, comma separated, one header row, no quoting. A row
// whose field count differs from the header is an error naming the 1-based
// data row number.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

// Full-string numeric parse; nullopt when the cell is not a number.
std::optional<double> parse_cell(const std::string& cell);

}  // namespace correg::data
