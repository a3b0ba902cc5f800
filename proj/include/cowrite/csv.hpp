#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cowrite::csv {

struct Row {
  std::vector<std::string> fields;
  std::size_t line_no = 0;  // 1-based line on which the record starts
};

// RFC 4180 reader: quoted fields may contain separators, quotes ("") and
// newlines. CRLF and LF line endings are both accepted.
std::vector<Row> parse(std::string_view text);

// Header-addressed view over parsed rows.
class Table {
 public:
  explicit Table(std::string_view text);

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<Row>& rows() const { return rows_; }
  std::optional<std::size_t> column(std::string_view name) const;
  // Returns "" when the row is shorter than the header.
  std::string_view cell(const Row& row, std::size_t col) const;

 private:
  std::vector<std::string> header_;
  std::vector<Row> rows_;
};

std::string escape(std::string_view field);
std::string join(const std::vector<std::string>& fields);

// Shortest round-trippable decimal for a double ("%.17g" then trimmed).
std::string format_double(double v);
// Fixed precision, for human-facing tables.
std::string format_fixed(double v, int digits);

}  // namespace cowrite::csv
