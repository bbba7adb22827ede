#pragma once

#include <string>
#include <vector>

#include "mpcc/bench/metrics.hpp"

namespace mpcc::bench {

// Plain comma-separated table: a fixed header row, then string cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  bool operator==(const CsvTable&) const = default;
};

// Shortest text that parses back to the same double.
std::string format_number(double v);

std::string to_csv(const CsvTable& t);
// Inverse of to_csv; cells must not contain commas or quotes.
CsvTable parse_csv(const std::string& text);
void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

extern const std::vector<std::string> kSeriesHeader;
CsvTable series_table(const std::vector<SeriesRow>& rows);

}  // namespace mpcc::bench
