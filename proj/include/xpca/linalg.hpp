#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace xpca {

/// Dense row-major matrix. Used for eigenvector sets and general scratch work.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t d);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::vector<double> column(std::size_t j) const;
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }

  const std::vector<double>& data() const noexcept { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Symmetric d x d matrix stored as its packed lower triangle, so
/// (i, j) and (j, i) always refer to the same entry.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(std::size_t dim) : dim_(dim), packed_(dim * (dim + 1) / 2, 0.0) {}

  static SymMatrix identity(std::size_t d);
  static SymMatrix diagonal(std::span<const double> diag);
  /// Throws unless `rows` is square and exactly symmetric.
  static SymMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t dim() const noexcept { return dim_; }

  double operator()(std::size_t i, std::size_t j) const { return packed_[index(i, j)]; }
  void set(std::size_t i, std::size_t j, double v) { packed_[index(i, j)] = v; }

  /// this += weight * x x^T
  void add_outer(std::span<const double> x, double weight = 1.0);

  SymMatrix& operator+=(const SymMatrix& other);
  SymMatrix& operator-=(const SymMatrix& other);
  SymMatrix& operator*=(double s);

  double trace() const;
  bool all_finite() const;
  Matrix to_dense() const;

 private:
  std::size_t index(std::size_t i, std::size_t j) const noexcept {
    return i >= j ? i * (i + 1) / 2 + j : j * (j + 1) / 2 + i;
  }

  std::size_t dim_ = 0;
  std::vector<double> packed_;
};

SymMatrix operator+(SymMatrix a, const SymMatrix& b);
SymMatrix operator-(SymMatrix a, const SymMatrix& b);

/// Eigenvalues sorted descending; eigenvectors stored as the matching columns.
struct EigenDecomposition {
  std::vector<double> values;
  Matrix vectors;
};

/// Cyclic Jacobi eigensolver.
///
/// Ties are ordered by original column index and each eigenvector is signed
/// so that its largest-magnitude coordinate is positive, which makes the
/// output reproducible. Under tied eigenvalues the returned basis is one
/// valid choice among many.
///
/// Throws Error(invalid_input) on non-finite entries and
/// Error(convergence_failure) if the off-diagonal mass does not drop below
/// 1e-12 * ||A||_HS within 100 sweeps.
EigenDecomposition sym_eig(const SymMatrix& a);

double hs_norm(const SymMatrix& a);
double operator_norm(const SymMatrix& a);
double trace(const SymMatrix& a);

// Small vector helpers shared across modules.
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> x);

}  // namespace xpca
