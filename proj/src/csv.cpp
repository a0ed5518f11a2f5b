#include "wmfc/csv.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace wmfc {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvTable& CsvTable::row(std::vector<std::string> cells) {
  if (cells.size() != cols_.size()) throw std::invalid_argument("CsvTable: row width differs from header");
  rows_.push_back(std::move(cells));
  return *this;
}

void CsvTable::write(std::ostream& os) const {
  auto line = [&os](const std::vector<std::string>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    os << '\n';
  };
  line(cols_);
  for (const auto& r : rows_) line(r);
}

void CsvTable::save(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  write(f);
}

}  // namespace wmfc
