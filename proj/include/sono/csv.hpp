#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace sono::csv {

struct Row {
  std::size_t line = 0;  // 1-based line number in the source file
  std::vector<std::string> fields;
};

struct Table {
  std::vector<std::string> header;
  std::vector<Row> rows;
  // Lines starting with '#' before the header, without the leading '#'.
  std::vector<std::string> comments;

  // Index of a header column; throws ParseError naming the column if absent.
  std::size_t column(std::string_view name) const;
};

// Parses comma-separated text with a header row. No quoting support: the
// formats in this project never embed commas in fields.
Table parse(std::string_view text);
Table read_file(const std::filesystem::path& path);

// Strict decimal parse; throws ParseError mentioning `line` on failure.
double to_double(const std::string& field, std::size_t line);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

// Shortest text that parses back to the same double.
std::string format_double(double v);

}  // namespace sono::csv
