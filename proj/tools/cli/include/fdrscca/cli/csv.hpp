#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fdrscca/core.hpp"

namespace fdrscca::cli {

// Parse failure with a 1-based data row / column position (0 = not applicable).
class CsvError : public std::runtime_error {
 public:
  CsvError(const std::string& what, std::size_t row, std::size_t column)
      : std::runtime_error(what), row_(row), column_(column) {}
  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

struct CsvMatrix {
  Matrix values;
  std::vector<std::string> names;  // one per numeric column
  bool has_header = false;
  // Raw labels of the stratum column, when one was requested.
  std::optional<std::vector<std::string>> strata;
};

// Reads a numeric CSV. The first line is a header iff one of its cells is not
// a number. `stratum_column` names a column (or gives its 0-based index when
// there is no header) holding per-row labels; it is removed from the matrix.
CsvMatrix read_csv_matrix(const std::string& path,
                          const std::optional<std::string>& stratum_column = std::nullopt);
CsvMatrix parse_csv_matrix(const std::string& text, const std::string& source,
                           const std::optional<std::string>& stratum_column = std::nullopt);

// Shortest round-trip decimal form; independent of the global locale.
std::string format_double(double value);

// Quotes a cell when it contains a separator, quote or newline.
std::string csv_cell(const std::string& text);

}  // namespace fdrscca::cli
