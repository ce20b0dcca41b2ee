#pragma once

#include <istream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace factcheck {

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// RFC 4180-style reader: comma separated, double-quoted fields may contain
/// commas, quotes ("") and newlines. The first record is the header.
class CsvReader {
 public:
  /// Reads the header and checks that every name in `required` is present.
  CsvReader(std::istream& in, const std::vector<std::string>& required);

  /// Next record, or nullopt at end of input. Blank lines are skipped.
  std::optional<std::vector<std::string>> next();

  /// Field by column name from a record returned by next().
  [[nodiscard]] const std::string& field(const std::vector<std::string>& row,
                                         const std::string& name) const;
  /// 1-based line number where the last returned record started.
  [[nodiscard]] std::size_t line() const { return record_line_; }

 private:
  std::optional<std::vector<std::string>> read_record();

  std::istream& in_;
  std::map<std::string, std::size_t> columns_;
  std::size_t line_ = 1;
  std::size_t record_line_ = 0;
};

}  // namespace factcheck
