#include "xpca/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "xpca/error.hpp"

namespace xpca {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

char detect_delimiter(const std::string& line) {
  for (char c : {',', '\t', ';'}) {
    if (line.find(c) != std::string::npos) return c;
  }
  return ' ';
}

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> cells;
  if (delim == ' ') {
    std::istringstream ss(line);
    std::string cell;
    while (ss >> cell) cells.push_back(cell);
    return cells;
  }
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, delim)) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == delim) cells.emplace_back();
  return cells;
}

std::optional<double> parse_number(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (*first == '+') ++first;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return v;
}

[[noreturn]] void parse_fail(const std::string& source, std::size_t line, std::size_t column,
                             const std::string& what) {
  fail(ErrorCode::parse_error, source + ":" + std::to_string(line) + ": column " +
                                   std::to_string(column) + ": " + what);
}

}  // namespace

NumericTable parse_table(std::istream& in, const std::string& source) {
  NumericTable table;
  std::string raw;
  std::size_t line_no = 0;
  std::optional<char> delim;
  std::size_t width = 0;
  bool first_content = true;

  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (!delim) delim = detect_delimiter(line);
    const auto cells = split(line, *delim);

    if (first_content) {
      first_content = false;
      bool any_numeric = false;
      for (const auto& c : cells) any_numeric = any_numeric || parse_number(c).has_value();
      if (!any_numeric) {
        table.header = cells;
        width = cells.size();
        continue;
      }
    }

    if (width == 0) width = cells.size();
    if (cells.size() != width) {
      parse_fail(source, line_no, std::min(cells.size(), width) + 1,
                 "expected " + std::to_string(width) + " columns, found " +
                     std::to_string(cells.size()));
    }
    std::vector<double> row(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (cells[j].empty()) parse_fail(source, line_no, j + 1, "missing value");
      const auto v = parse_number(cells[j]);
      if (!v) parse_fail(source, line_no, j + 1, "non-numeric value '" + cells[j] + "'");
      if (!std::isfinite(*v)) parse_fail(source, line_no, j + 1, "non-finite value");
      row[j] = *v;
    }
    table.rows.push_back(std::move(row));
  }
  if (table.rows.empty()) fail(ErrorCode::parse_error, source + ": no data rows");
  return table;
}

NumericTable read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot open '" + path + "'");
  return parse_table(in, path);
}

Sample read_sample(const std::string& path) { return Sample::from_rows(read_table(path).rows); }

void write_sample(std::ostream& out, const Sample& s) {
  for (std::size_t i = 0; i < s.n(); ++i) {
    const auto row = s.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out << ',';
      out << format_double(row[j]);
    }
    out << '\n';
  }
}

Subspace read_subspace(const std::string& path) {
  const auto table = read_table(path);
  const auto& rows = table.rows;
  const std::size_t d = rows.front().size();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double target = i == j ? 1.0 : 0.0;
      if (std::abs(dot(rows[i], rows[j]) - target) > 1e-8) {
        fail(ErrorCode::invalid_input,
             path + ": basis vectors " + std::to_string(j + 1) + " and " + std::to_string(i + 1) +
                 " are not orthonormal to 1e-8");
      }
    }
  }
  return Subspace::span_of(d, rows);
}

void write_subspace(std::ostream& out, const Subspace& v) {
  for (const auto& b : v.basis()) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (j) out << ',';
      out << format_double(b[j]);
    }
    out << '\n';
  }
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace xpca
