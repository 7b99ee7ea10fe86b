#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace metashift::csv {

using Row = std::vector<std::string>;

struct Table {
  std::vector<std::string> comments;  // leading "# ..." lines, without the '#'
  Row header;
  std::vector<Row> rows;

  /// Column index by name; throws ValidationError if absent.
  std::size_t column(const std::string& name) const;
};

/// Formats a double with 10 significant digits.
std::string num(double v);

/// Renders a table: comment lines, header, rows. Fields are not quoted;
/// callers only emit identifiers and numbers.
std::string render(const Table& t);

Table parse(const std::string& text);
Table read(const std::filesystem::path& path);
void write(const std::filesystem::path& path, const Table& t);

}  // namespace metashift::csv
