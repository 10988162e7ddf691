#include "stringbreak/csv.hpp"

#include <cstdio>
#include <sstream>

#include "stringbreak/errors.hpp"

namespace stringbreak {

std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path, std::vector<std::string> header)
    : path_(path), header_(std::move(header)), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw Error("cannot open '" + path + "' for writing");
  for (std::size_t i = 0; i < header_.size(); ++i) out_ << (i ? "," : "") << header_[i];
  out_ << '\n';
}

void CsvWriter::row(std::span<const double> cells) {
  if (cells.size() != header_.size()) {
    throw Error(path_ + ": row has " + std::to_string(cells.size()) + " cells, header has " +
                std::to_string(header_.size()));
  }
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += format_real(cells[i]);
  }
  line += '\n';
  out_ << line;
  if (!out_) throw Error("write failed: " + path_);
}

void CsvWriter::close() {
  out_.close();
  if (out_.fail()) throw Error("close failed: " + path_);
}

std::vector<std::string> read_csv_header(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::string line;
  std::getline(in, line);
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace stringbreak
