#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace lungsim {

/// Minimal CSV reader: comma separated, optional double quotes, first row is
/// the header. Blank lines and lines starting with '#' are skipped.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws ErrorKind::format naming the column.
  std::size_t column(const std::string& name) const;
};

CsvTable parse_csv(std::string_view text, const std::string& source);
CsvTable read_csv(const std::string& path);

/// Strict numeric conversion; throws ErrorKind::format naming `field`.
double parse_double(const std::string& text, const std::string& field);

}  // namespace lungsim
