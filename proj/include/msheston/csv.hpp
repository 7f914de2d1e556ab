#pragma once

#include <istream>
#include <string>
#include <vector>

#include "msheston/error.hpp"

namespace msh {

/// One data row of a headed CSV file.
class CsvRow {
 public:
  std::size_t line() const noexcept { return line_; }
  std::size_t size() const noexcept { return fields_.size(); }
  const std::string& field(std::size_t i) const { return fields_.at(i); }
  /// Throws ParseError naming the line and column.
  double number(std::size_t i) const;
  long long integer(std::size_t i) const;
  Error error(const std::string& what) const;

 private:
  friend class CsvReader;
  std::vector<std::string> fields_;
  std::vector<std::string> const* names_ = nullptr;
  std::size_t line_ = 0;
};

/// Comma-separated reader with a mandatory header. Columns are matched by name
/// and reordered to `columns`; extra columns are ignored. Quoting is not
/// supported. Blank lines are skipped.
class CsvReader {
 public:
  CsvReader(std::istream& is, std::vector<std::string> columns);

  bool next(CsvRow& row);
  std::size_t line() const noexcept { return line_; }

 private:
  std::istream& is_;
  std::vector<std::string> columns_;
  std::vector<std::size_t> index_;
  std::size_t width_ = 0;
  std::size_t line_ = 0;
};

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace msh
