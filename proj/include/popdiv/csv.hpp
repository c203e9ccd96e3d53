#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace popdiv::csv {

using Row = std::vector<std::string>;

/// RFC 4180 field quoting: fields containing a comma, quote, CR or LF are
/// wrapped in quotes with embedded quotes doubled.
std::string escape(std::string_view field);
std::string format_row(const Row& row);

/// Parses RFC 4180 text. Quoted fields may span lines.
std::vector<Row> parse(std::string_view text);

struct Table {
  Row header;
  std::vector<Row> rows;

  /// Index of a header column, or throws SchemaError.
  std::size_t column(std::string_view name) const;
};

/// Reads a file and checks that its header contains every required column.
Table read_table(const std::filesystem::path& path, const std::vector<std::string>& required);

void write_table(const std::filesystem::path& path, const Row& header, const std::vector<Row>& rows);

}  // namespace popdiv::csv
