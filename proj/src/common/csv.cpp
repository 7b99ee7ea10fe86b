#include "metashift/common/csv.hpp"

#include <cstdio>
#include <sstream>

#include "metashift/common/error.hpp"
#include "metashift/common/io.hpp"

namespace metashift::csv {

std::size_t Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw ValidationError("CSV column not found: " + name);
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

namespace {

void append_row(std::string& out, const Row& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out += ',';
    out += row[i];
  }
  out += '\n';
}

Row split(const std::string& line) {
  Row fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

std::string render(const Table& t) {
  std::string out;
  for (const auto& c : t.comments) out += "#" + c + "\n";
  append_row(out, t.header);
  for (const auto& r : t.rows) append_row(out, r);
  return out;
}

Table parse(const std::string& text) {
  Table t;
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (!have_header && line[0] == '#') {
      t.comments.push_back(line.substr(1));
      continue;
    }
    if (!have_header) {
      t.header = split(line);
      have_header = true;
    } else {
      t.rows.push_back(split(line));
    }
  }
  return t;
}

Table read(const std::filesystem::path& path) { return parse(io::read_file(path)); }

void write(const std::filesystem::path& path, const Table& t) {
  io::write_file_atomic(path, render(t));
}

}  // namespace metashift::csv
