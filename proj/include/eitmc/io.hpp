#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace eitmc::io {

/// Shortest decimal form that reads back to the same double.
std::string format_double(double v);

/// Parses a full token as a double; throws ParseError mentioning `where`.
double parse_double(const std::string& token, const std::string& where);

/// Reads a whole file. Missing or unreadable files raise ConfigError naming the path.
std::string read_text(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it into place, so readers
/// never observe a partial file.
void write_atomic(const std::filesystem::path& path, const std::string& content);

std::vector<std::string> split_ws(const std::string& line);
std::vector<std::string> split(const std::string& line, char sep);
std::vector<std::string> lines(const std::string& text);

}  // namespace eitmc::io
