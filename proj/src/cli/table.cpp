#include "nvlock/cli/table.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace nvlock::cli {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string join(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  return out;
}

double parse_value(const std::string& s, int line) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (s.empty() || r.ec != std::errc() || r.ptr != end) {
    throw std::invalid_argument("line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

}  // namespace

std::string format_value(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

ResultTable::ResultTable(const std::vector<std::pair<std::string, std::string>>& columns) {
  for (const auto& [name, unit] : columns) add_column(name, unit);
}

void ResultTable::add_column(const std::string& name, const std::string& unit) {
  if (!rows_.empty()) throw std::invalid_argument("add_column after rows were added");
  if (name.find_first_of(",\n") != std::string::npos ||
      unit.find_first_of(",\n") != std::string::npos) {
    throw std::invalid_argument("column names and units may not contain ',' or newlines");
  }
  columns_.push_back(name);
  units_.push_back(unit.empty() ? "1" : unit);
}

void ResultTable::add_row(std::vector<double> row) {
  if (row.size() != columns_.size()) {
    throw std::invalid_argument("row has " + std::to_string(row.size()) + " values, table has " +
                                std::to_string(columns_.size()) + " columns");
  }
  rows_.push_back(std::move(row));
}

void ResultTable::set_meta(const std::string& key, const std::string& value) {
  if (key.find_first_of(":\n") != std::string::npos || value.find('\n') != std::string::npos) {
    throw std::invalid_argument("metadata key '" + key + "' is not a single line");
  }
  for (auto& [k, v] : metadata_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  metadata_.emplace_back(key, value);
}

std::string ResultTable::meta(const std::string& key) const {
  for (const auto& [k, v] : metadata_) {
    if (k == key) return v;
  }
  return {};
}

std::size_t ResultTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i] == name) return i;
  }
  throw std::out_of_range("no column '" + name + "'");
}

bool ResultTable::operator==(const ResultTable& other) const {
  if (metadata_ != other.metadata_ || columns_ != other.columns_ || units_ != other.units_ ||
      rows_.size() != other.rows_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (rows_[i].size() != other.rows_[i].size()) return false;
    for (std::size_t j = 0; j < rows_[i].size(); ++j) {
      const double a = rows_[i][j];
      const double b = other.rows_[i][j];
      if (!(a == b || (std::isnan(a) && std::isnan(b)))) return false;
    }
  }
  return true;
}

void write_table(std::ostream& out, const ResultTable& table) {
  for (const auto& [k, v] : table.metadata()) out << "# " << k << ": " << v << '\n';
  out << join(table.columns()) << '\n' << join(table.units()) << '\n';
  for (const auto& row : table.rows()) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out << ',';
      out << format_value(row[j]);
    }
    out << '\n';
  }
}

void write_tables(std::ostream& out, const std::vector<ResultTable>& tables) {
  for (std::size_t i = 0; i < tables.size(); ++i) {
    if (i) out << '\n';
    write_table(out, tables[i]);
  }
}

std::vector<ResultTable> read_tables(std::istream& in) {
  std::vector<ResultTable> out;
  enum class State { Idle, Meta, Units, Rows } state = State::Idle;
  ResultTable current;
  std::vector<std::string> header;
  std::string line;
  int number = 0;
  auto finish = [&] {
    if (state == State::Meta || state == State::Units) {
      throw std::invalid_argument("line " + std::to_string(number) + ": table without header rows");
    }
    if (state == State::Rows) out.push_back(std::move(current));
    current = ResultTable();
    state = State::Idle;
  };
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      finish();
      continue;
    }
    if (line.front() == '#') {
      if (state == State::Rows) finish();
      if (state == State::Units) {
        throw std::invalid_argument("line " + std::to_string(number) + ": missing units row");
      }
      const auto colon = line.find(':');
      if (colon == std::string::npos || line.size() < 2 || line[1] != ' ') {
        throw std::invalid_argument("line " + std::to_string(number) + ": malformed metadata");
      }
      std::string value = line.substr(colon + 1);
      if (!value.empty() && value.front() == ' ') value.erase(0, 1);
      current.set_meta(line.substr(2, colon - 2), value);
      state = State::Meta;
      continue;
    }
    if (state == State::Idle || state == State::Meta) {
      header = split(line);
      state = State::Units;
      continue;
    }
    if (state == State::Units) {
      const auto units = split(line);
      if (units.size() != header.size()) {
        throw std::invalid_argument("line " + std::to_string(number) + ": units row has " +
                                    std::to_string(units.size()) + " cells, header has " +
                                    std::to_string(header.size()));
      }
      for (std::size_t j = 0; j < header.size(); ++j) current.add_column(header[j], units[j]);
      state = State::Rows;
      continue;
    }
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw std::invalid_argument("line " + std::to_string(number) + ": expected " +
                                  std::to_string(header.size()) + " values, got " +
                                  std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_value(c, number));
    current.add_row(std::move(row));
  }
  finish();
  return out;
}

}  // namespace nvlock::cli
