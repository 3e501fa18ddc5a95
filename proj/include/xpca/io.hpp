#pragma once

// Delimiter-separated numeric tables: samples and subspace bases.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "xpca/epca.hpp"

namespace xpca {

struct NumericTable {
  std::optional<std::vector<std::string>> header;
  std::vector<std::vector<double>> rows;
};

/// Parses comma, tab, semicolon or whitespace separated numbers. A first
/// line made only of non-numeric cells is taken as a header; blank lines and
/// lines starting with '#' are skipped. Missing or non-numeric cells throw
/// Error(parse_error) naming the line and column.
NumericTable parse_table(std::istream& in, const std::string& source);
NumericTable read_table(const std::string& path);

Sample read_sample(const std::string& path);
void write_sample(std::ostream& out, const Sample& s);

/// p rows of d numbers, orthonormal to 1e-8.
Subspace read_subspace(const std::string& path);
void write_subspace(std::ostream& out, const Subspace& v);

/// Shortest round-trip decimal form (17 significant digits); "inf"/"-inf"/"nan" otherwise.
std::string format_double(double v);

}  // namespace xpca
