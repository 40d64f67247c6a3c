// SPDX-License-Identifier: Apache-2.0
//
// Delimited text tables (CSV/TSV). Header row is mandatory; lines starting
// with '#' before the header are metadata comments and are preserved.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace circuits {

struct TextTable {
  std::vector<std::string> comments;  // without the leading "# "
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws FormatError if absent.
  std::size_t column(std::string_view name) const;

  void write(std::ostream& os, char delim) const;
  void save(const std::filesystem::path& path, char delim) const;
  static TextTable read(std::istream& is, char delim, const std::string& origin = "<stream>");
  static TextTable load(const std::filesystem::path& path, char delim);
};

/// Shortest decimal text that parses back to the same double; infinities
/// are written as "inf" / "-inf".
std::string format_double(double v);
double parse_double(std::string_view text);
long long parse_int64(std::string_view text);

}  // namespace circuits
