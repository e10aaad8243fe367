#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace mlmbias {

// RFC 4180 reader: quoted fields may hold separators, doubled quotes and
// line breaks. CRLF and LF line endings are both accepted.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  // Reads the next record into `row`. Returns false at end of input.
  bool next(std::vector<std::string>& row);

  // 1-based physical line on which the last record started.
  std::size_t line() const { return record_line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 1;
  std::size_t record_line_ = 0;
};

// Quotes a field if it contains a separator, quote or line break.
std::string csv_escape(std::string_view field);

}  // namespace mlmbias
