#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace wmfc {

// %.17g, so values round-trip
std::string fmt(double v);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns) : cols_(std::move(columns)) {}

  CsvTable& row(std::vector<std::string> cells);
  std::size_t rows() const { return rows_.size(); }
  void write(std::ostream& os) const;
  // writes to `path`, throwing std::runtime_error when the file cannot be opened
  void save(const std::string& path) const;

 private:
  std::vector<std::string> cols_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace wmfc
