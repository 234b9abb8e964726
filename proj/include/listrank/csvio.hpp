#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

namespace listrank::io {

// Minimal comma-separated reader: UTF-8, first row is the header, no quoting
// (none of the project's formats need it). Trailing CR is stripped.
struct CsvFile {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line per row
};

CsvFile read_csv(const std::filesystem::path& path);

std::vector<std::string> split_fields(const std::string& line);

// Round-trip decimal formatting for doubles written to CSV.
std::string fmt_double(double v);

double parse_double(const std::string& field, const std::filesystem::path& path,
                    std::size_t line);

void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace listrank::io
