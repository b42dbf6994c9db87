#pragma once

#include <string>
#include <vector>

namespace sst::io {

// Shortest round-trip decimal with '.' separator regardless of locale;
// infinities print as inf / -inf.
std::string format_number(double v);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  // Cells are quoted when they contain a comma, quote or newline.
  void add_row(std::vector<std::string> cells);
  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return rows_.size(); }
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace sst::io
