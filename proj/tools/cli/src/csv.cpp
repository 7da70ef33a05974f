#include "fdrscca/cli/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>

namespace fdrscca::cli {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string unquote(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    std::string out;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
      if (s[i] == '"' && i + 2 < s.size() && s[i + 1] == '"') ++i;
      out.push_back(s[i]);
    }
    return out;
  }
  return std::string(s);
}

// Splits on commas outside double quotes.
std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> cells;
  std::string current;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') quoted = !quoted;
    if (c == ',' && !quoted) {
      cells.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  cells.push_back(std::move(current));
  return cells;
}

std::optional<double> parse_number(std::string_view cell) {
  cell = trim(cell);
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) return std::nullopt;
  return value;
}

std::optional<std::size_t> parse_index(const std::string& s) {
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

}  // namespace

CsvMatrix read_csv_matrix(const std::string& path,
                          const std::optional<std::string>& stratum_column) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CsvError(path + ": cannot open file", 0, 0);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv_matrix(buffer.str(), path, stratum_column);
}

CsvMatrix parse_csv_matrix(const std::string& text, const std::string& source,
                           const std::optional<std::string>& stratum_column) {
  struct Line {
    std::size_t number;
    std::vector<std::string> cells;
  };
  std::vector<Line> lines;
  std::size_t number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    ++number;
    const std::string_view raw(text.data() + start, end - start);
    if (!trim(raw).empty()) lines.push_back({number, split_line(raw)});
    start = end + 1;
  }
  if (lines.empty()) throw CsvError(source + ": no data", 0, 0);

  CsvMatrix out;
  const std::size_t width = lines.front().cells.size();
  for (const auto& cell : lines.front().cells) {
    if (!parse_number(cell)) {
      out.has_header = true;
      break;
    }
  }

  std::optional<std::size_t> stratum;
  if (stratum_column) {
    if (out.has_header) {
      for (std::size_t c = 0; c < width; ++c) {
        if (unquote(lines.front().cells[c]) == *stratum_column) stratum = c;
      }
    }
    if (!stratum) stratum = parse_index(*stratum_column);
    if (!stratum || *stratum >= width) {
      throw CsvError(source + ": stratum column '" + *stratum_column + "' not found", 0, 0);
    }
    out.strata.emplace();
  }

  for (std::size_t c = 0; c < width; ++c) {
    if (stratum && c == *stratum) continue;
    out.names.push_back(out.has_header ? unquote(lines.front().cells[c]) : std::to_string(c));
  }
  if (out.names.empty()) throw CsvError(source + ": no numeric columns", 0, 0);

  const std::size_t first = out.has_header ? 1 : 0;
  const std::size_t rows = lines.size() - first;
  out.values.resize(static_cast<Index>(rows), static_cast<Index>(out.names.size()));
  for (std::size_t r = 0; r < rows; ++r) {
    const Line& line = lines[first + r];
    const std::string where = source + ": row " + std::to_string(r + 1) + " (line " +
                              std::to_string(line.number) + ")";
    if (line.cells.size() != width) {
      throw CsvError(where + ": expected " + std::to_string(width) + " columns, found " +
                         std::to_string(line.cells.size()),
                     r + 1, 0);
    }
    Index col = 0;
    for (std::size_t c = 0; c < width; ++c) {
      if (stratum && c == *stratum) {
        out.strata->push_back(unquote(line.cells[c]));
        continue;
      }
      const auto value = parse_number(line.cells[c]);
      if (!value) {
        throw CsvError(where + ", column " + std::to_string(c + 1) + ": non-numeric value '" +
                           unquote(line.cells[c]) + "'",
                       r + 1, c + 1);
      }
      if (!std::isfinite(*value)) {
        throw CsvError(where + ", column " + std::to_string(c + 1) + ": non-finite value", r + 1,
                       c + 1);
      }
      out.values(static_cast<Index>(r), col++) = *value;
    }
  }
  return out;
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) return "0";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::string csv_cell(const std::string& text) {
  if (text.find_first_of(",\"\n\r") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace fdrscca::cli
