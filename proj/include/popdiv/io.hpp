#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace popdiv {

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames it over the target, so readers
/// never observe a partially written file. Creates parent directories.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

/// Non-empty lines with surrounding whitespace trimmed; lines starting with
/// '#' are comments.
std::vector<std::string> read_lines(const std::filesystem::path& path);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Shortest round-trip decimal for a double ("1.5", "2", "0.9").
std::string format_number(double value);

}  // namespace popdiv
