#include "sono/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "sono/error.hpp"

namespace sono::csv {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.emplace_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

std::size_t Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  fail(ErrorCode::ParseError, "missing column '" + std::string(name) + "'");
}

Table parse(std::string_view text) {
  Table table;
  bool have_header = false;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view raw = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (line.front() == '#') {
      if (!have_header) table.comments.emplace_back(trim(line.substr(1)));
      continue;
    }
    if (!have_header) {
      table.header = split(line);
      have_header = true;
      continue;
    }
    Row row{line_no, split(line)};
    if (row.fields.size() != table.header.size()) {
      fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected " +
                                      std::to_string(table.header.size()) + " fields, got " +
                                      std::to_string(row.fields.size()));
    }
    table.rows.push_back(std::move(row));
    if (end == text.size()) break;
  }
  if (!have_header) fail(ErrorCode::ParseError, "missing header row");
  return table;
}

Table read_file(const std::filesystem::path& path) { return parse(read_text(path)); }

double to_double(const std::string& field, std::size_t line) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || field.empty()) {
    fail(ErrorCode::ParseError,
         "line " + std::to_string(line) + ": not a number: '" + field + "'");
  }
  return v;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) fail(ErrorCode::IoError, "read failed: " + path.string());
  return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) fail(ErrorCode::IoError, "write failed: " + path.string());
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace sono::csv
