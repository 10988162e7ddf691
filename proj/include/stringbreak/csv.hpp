#pragma once

#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace stringbreak {

// Header row plus numeric rows, 17 significant digits, LF line endings.
// Every row must have exactly as many cells as the header.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, std::vector<std::string> header);
  void row(std::span<const double> cells);
  void row(std::initializer_list<double> cells) { row(std::span<const double>(cells.begin(), cells.size())); }
  const std::vector<std::string>& header() const { return header_; }
  void close();

 private:
  std::string path_;
  std::vector<std::string> header_;
  std::ofstream out_;
};

std::string format_real(double x);

// First line of a CSV file split on commas.
std::vector<std::string> read_csv_header(const std::string& path);

}  // namespace stringbreak
