#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "feedread/common.hpp"

namespace feedread::csv {

/// A parsed comma-separated file. `line_numbers[i]` is the 1-based line on
/// which data row i starts (the header is line 1).
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;

  /// Index of `name` in the header; throws ParseError naming `context` if absent.
  std::size_t column(std::string_view name, std::string_view context = {}) const;
};

/// RFC-4180 parsing: quoted fields, doubled quotes, CRLF or LF line ends.
/// Every row must have as many fields as the header.
Table parse(std::string_view text, std::string_view source = "<memory>");
Table read(const std::filesystem::path& path);

/// Quotes a field when it contains a comma, quote or line break.
std::string escape(std::string_view field);
std::string join_row(const std::vector<std::string>& fields);

std::string trim(std::string_view s);

}  // namespace feedread::csv
