#include "msheston/csv.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

namespace msh {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

Error parse_error(std::size_t line, const std::string& what) {
  std::ostringstream os;
  os << "line " << line << ": " << what;
  return Error(ErrorCode::ParseError, os.str());
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string::size_type start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

Error CsvRow::error(const std::string& what) const { return parse_error(line_, what); }

double CsvRow::number(std::size_t i) const {
  const std::string& s = field(i);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw error("column '" + (*names_)[i] + "' is not a number: '" + s + "'");
  }
  return v;
}

long long CsvRow::integer(std::size_t i) const {
  const std::string& s = field(i);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw error("column '" + (*names_)[i] + "' is not an integer: '" + s + "'");
  }
  return v;
}

CsvReader::CsvReader(std::istream& is, std::vector<std::string> columns) : is_(is), columns_(std::move(columns)) {
  std::string header;
  do {
    if (!std::getline(is_, header)) throw parse_error(line_ + 1, "missing header row");
    ++line_;
  } while (trim(header).empty());
  const auto names = split_csv_line(header);
  width_ = names.size();
  for (const auto& c : columns_) {
    const auto it = std::find(names.begin(), names.end(), c);
    if (it == names.end()) throw parse_error(line_, "header lacks column '" + c + "'");
    index_.push_back(static_cast<std::size_t>(it - names.begin()));
  }
}

bool CsvReader::next(CsvRow& row) {
  std::string text;
  while (std::getline(is_, text)) {
    ++line_;
    if (trim(text).empty()) continue;
    const auto fields = split_csv_line(text);
    if (fields.size() != width_) {
      std::ostringstream os;
      os << "expected " << width_ << " fields, found " << fields.size();
      throw parse_error(line_, os.str());
    }
    row.fields_.clear();
    for (auto i : index_) row.fields_.push_back(fields[i]);
    row.names_ = &columns_;
    row.line_ = line_;
    return true;
  }
  return false;
}

}  // namespace msh
