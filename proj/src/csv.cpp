#include "factcheck/csv.hpp"

namespace factcheck {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

CsvReader::CsvReader(std::istream& in, const std::vector<std::string>& required) : in_(in) {
  auto header = read_record();
  if (!header) throw CsvError("CSV input is empty; expected a header row");
  for (std::size_t i = 0; i < header->size(); ++i) columns_[trim((*header)[i])] = i;
  for (const auto& name : required) {
    if (!columns_.contains(name)) throw CsvError("CSV header lacks column '" + name + "'");
  }
}

std::optional<std::vector<std::string>> CsvReader::next() {
  while (true) {
    auto row = read_record();
    if (!row) return std::nullopt;
    if (row->size() == 1 && trim((*row)[0]).empty()) continue;
    return row;
  }
}

const std::string& CsvReader::field(const std::vector<std::string>& row,
                                    const std::string& name) const {
  const auto it = columns_.find(name);
  if (it == columns_.end()) throw CsvError("unknown CSV column '" + name + "'");
  if (it->second >= row.size()) {
    throw CsvError("line " + std::to_string(record_line_) + ": missing field '" + name + "'");
  }
  return row[it->second];
}

std::optional<std::vector<std::string>> CsvReader::read_record() {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  bool any = false;
  record_line_ = line_;
  int ch = 0;
  while ((ch = in_.get()) != std::char_traits<char>::eof()) {
    any = true;
    const char c = static_cast<char>(ch);
    if (quoted) {
      if (c == '"') {
        if (in_.peek() == '"') {
          current.push_back('"');
          in_.get();
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line_;
        current.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(current));
      current.clear();
    } else if (c == '\n') {
      ++line_;
      fields.push_back(trim(current));
      return fields;
    } else {
      current.push_back(c);
    }
  }
  if (quoted) throw CsvError("unterminated quoted field starting at line " +
                             std::to_string(record_line_));
  if (!any) return std::nullopt;
  fields.push_back(trim(current));
  return fields;
}

}  // namespace factcheck
