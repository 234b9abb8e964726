#include "listrank/csvio.hpp"

#include <charconv>
#include <fstream>

#include "listrank/errors.hpp"

namespace listrank::io {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

CsvFile read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path.string());
  CsvFile csv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      csv.header = split_fields(line);
      continue;
    }
    if (line.empty()) continue;
    csv.rows.push_back(split_fields(line));
    csv.line_numbers.push_back(line_no);
  }
  if (csv.header.empty()) {
    throw ParseError(path.string() + ": missing header row");
  }
  return csv;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& field, const std::filesystem::path& path,
                    std::size_t line) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ParseError(path.string() + ":" + std::to_string(line) +
                     ": not a number: '" + field + "'");
  }
  return value;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write file: " + path.string());
  out << content;
}

}  // namespace listrank::io
