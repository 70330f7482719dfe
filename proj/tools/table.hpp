#pragma once

// Column-typed result table with a provenance header, emitted as CSV or JSON.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace glmphase::cli {

/// monostate is an absent value, allowed only in optional columns.
using Cell = std::variant<std::monostate, double, std::int64_t, bool, std::string>;

struct Column {
  std::string name;
  bool optional = false;
};

class ResultTable {
 public:
  explicit ResultTable(std::vector<Column> columns) : columns_(std::move(columns)) {}

  /// Throws std::logic_error on a width mismatch or an absent value in a required column.
  void add_row(std::vector<Cell> row);
  void add_provenance(std::string key, std::string value);

  const std::vector<Column>& columns() const noexcept { return columns_; }
  const std::vector<std::vector<Cell>>& rows() const noexcept { return rows_; }
  const std::vector<std::pair<std::string, std::string>>& provenance() const noexcept {
    return provenance_;
  }

 private:
  std::vector<Column> columns_;
  std::vector<std::vector<Cell>> rows_;
  std::vector<std::pair<std::string, std::string>> provenance_;
};

/// 17 significant digits, '.' decimal separator; "nan", "inf", "-inf" for non-finite values.
std::string format_real(double x);

/// '#'-prefixed provenance lines, a header row, then RFC 4180 quoted records.
void write_csv(std::ostream& out, const ResultTable& table);
/// {"metadata": {...}, "rows": [{column: value, ...}, ...]}; absent and non-finite values are null.
void write_json(std::ostream& out, const ResultTable& table);

}  // namespace glmphase::cli
