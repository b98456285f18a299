#include "lungsim/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "lungsim/error.hpp"

namespace lungsim {
namespace {

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (char c : line) {
    if (c == '"') quoted = !quoted;
    else if (c == ',' && !quoted) out.emplace_back();
    else if (c != '\r') out.back() += c;
  }
  for (auto& f : out) {
    while (!f.empty() && f.front() == ' ') f.erase(f.begin());
    while (!f.empty() && f.back() == ' ') f.pop_back();
  }
  return out;
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw Error(ErrorKind::format, name, "missing CSV column");
}

CsvTable parse_csv(std::string_view text, const std::string& source) {
  CsvTable t;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos || line.front() == '#') continue;
    auto fields = split_line(line);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size())
      throw Error(ErrorKind::format, source,
                  "row " + std::to_string(t.rows.size() + 1) + " has " + std::to_string(fields.size()) +
                      " fields, header has " + std::to_string(t.header.size()));
    t.rows.push_back(std::move(fields));
  }
  if (t.header.empty()) throw Error(ErrorKind::format, source, "empty CSV");
  return t;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, path, "cannot open CSV");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), path);
}

double parse_double(const std::string& text, const std::string& field) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || text.empty())
    throw Error(ErrorKind::format, field, "not a number: '" + text + "'");
  return v;
}

}  // namespace lungsim
