#include "popdiv/csv.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "popdiv/error.hpp"
#include "popdiv/io.hpp"

namespace popdiv::csv {

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_row(const Row& row) {
  std::string out;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out += ',';
    out += escape(row[i]);
  }
  return out;
}

std::vector<Row> parse(std::string_view text) {
  std::vector<Row> rows;
  Row row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        field_started = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        row.push_back(std::move(field));
        field.clear();
        rows.push_back(std::move(row));
        row.clear();
        field_started = false;
        break;
      default:
        field += c;
        field_started = true;
    }
  }
  if (quoted) throw Error(ErrorCode::kSchemaError, "unterminated quoted CSV field");
  if (field_started || !row.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::size_t Table::column(std::string_view name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    throw Error(ErrorCode::kSchemaError, "missing CSV column '" + std::string(name) + "'");
  }
  return static_cast<std::size_t>(it - header.begin());
}

Table read_table(const std::filesystem::path& path, const std::vector<std::string>& required) {
  auto rows = parse(read_file(path));
  if (rows.empty()) throw Error(ErrorCode::kSchemaError, path.string() + ": empty CSV file");
  Table table;
  table.header = std::move(rows.front());
  for (const auto& name : required) {
    if (std::find(table.header.begin(), table.header.end(), name) == table.header.end()) {
      throw Error(ErrorCode::kSchemaError, path.string() + ": missing column '" + name + "'");
    }
  }
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() == 1 && rows[i][0].empty()) continue;
    if (rows[i].size() != table.header.size()) {
      throw Error(ErrorCode::kSchemaError,
                  path.string() + ": row " + std::to_string(i + 1) + " has " +
                      std::to_string(rows[i].size()) + " fields, expected " +
                      std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(rows[i]));
  }
  return table;
}

void write_table(const std::filesystem::path& path, const Row& header, const std::vector<Row>& rows) {
  std::string out = format_row(header) + "\n";
  for (const auto& row : rows) out += format_row(row) + "\n";
  write_file_atomic(path, out);
}

}  // namespace popdiv::csv
