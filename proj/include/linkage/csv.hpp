#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace linkage {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // each row same width as header
};

/// Strict reader: every row must have the header's width. Supports RFC-style
/// double-quoted fields. `name` is used in error messages.
CsvTable parse_csv(std::istream& in, const std::string& name);
CsvTable read_csv(const std::string& path);

/// Quotes a field only when it needs it.
std::string csv_escape(const std::string& field);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace linkage
