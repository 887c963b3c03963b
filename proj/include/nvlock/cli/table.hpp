#pragma once

// Comma-separated result tables with a `#` metadata block and a units row.
//
//   # tool: nvlock 0.1.0
//   # command: equilibrium
//   field,theta,...
//   T,deg,...
//   0.1,0.96,...
//
// Several tables in one stream are separated by blank lines.

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace nvlock::cli {

class ResultTable {
 public:
  using Metadata = std::vector<std::pair<std::string, std::string>>;

  ResultTable() = default;
  /// Columns as (name, unit) pairs.
  explicit ResultTable(const std::vector<std::pair<std::string, std::string>>& columns);

  void add_column(const std::string& name, const std::string& unit);
  /// Throws std::invalid_argument when the row width does not match.
  void add_row(std::vector<double> row);
  void set_meta(const std::string& key, const std::string& value);
  /// Empty string when absent.
  std::string meta(const std::string& key) const;

  const Metadata& metadata() const { return metadata_; }
  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::string>& units() const { return units_; }
  const std::vector<std::vector<double>>& rows() const { return rows_; }
  std::size_t column_index(const std::string& name) const;

  /// Exact equality; NaN entries compare equal to NaN.
  bool operator==(const ResultTable& other) const;

 private:
  Metadata metadata_;
  std::vector<std::string> columns_;
  std::vector<std::string> units_;
  std::vector<std::vector<double>> rows_;
};

/// Shortest text that reads back to the same double.
std::string format_value(double v);

void write_table(std::ostream& out, const ResultTable& table);
void write_tables(std::ostream& out, const std::vector<ResultTable>& tables);

/// Inverse of write_tables. Throws std::invalid_argument on malformed input.
std::vector<ResultTable> read_tables(std::istream& in);

}  // namespace nvlock::cli
