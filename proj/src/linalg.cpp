#include "xpca/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "xpca/error.hpp"

namespace xpca {

Matrix Matrix::identity(std::size_t d) {
  Matrix m(d, d);
  for (std::size_t i = 0; i < d; ++i) m(i, i) = 1.0;
  return m;
}

std::vector<double> Matrix::column(std::size_t j) const {
  std::vector<double> out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
  return out;
}

SymMatrix SymMatrix::identity(std::size_t d) {
  SymMatrix m(d);
  for (std::size_t i = 0; i < d; ++i) m.set(i, i, 1.0);
  return m;
}

SymMatrix SymMatrix::diagonal(std::span<const double> diag) {
  SymMatrix m(diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m.set(i, i, diag[i]);
  return m;
}

SymMatrix SymMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t d = rows.size();
  SymMatrix m(d);
  for (std::size_t i = 0; i < d; ++i) {
    require(rows[i].size() == d, "SymMatrix::from_rows: matrix is not square");
  }
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      require(rows[i][j] == rows[j][i] || (std::isnan(rows[i][j]) && std::isnan(rows[j][i])),
              "SymMatrix::from_rows: matrix is not symmetric at (" + std::to_string(i) + ", " +
                  std::to_string(j) + ")");
      m.set(i, j, rows[i][j]);
    }
  }
  return m;
}

void SymMatrix::add_outer(std::span<const double> x, double weight) {
  require(x.size() == dim_, "SymMatrix::add_outer: dimension mismatch");
  std::size_t idx = 0;
  for (std::size_t i = 0; i < dim_; ++i) {
    const double wi = weight * x[i];
    for (std::size_t j = 0; j <= i; ++j) packed_[idx++] += wi * x[j];
  }
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& other) {
  require(dim_ == other.dim_, "SymMatrix: dimension mismatch");
  for (std::size_t i = 0; i < packed_.size(); ++i) packed_[i] += other.packed_[i];
  return *this;
}

SymMatrix& SymMatrix::operator-=(const SymMatrix& other) {
  require(dim_ == other.dim_, "SymMatrix: dimension mismatch");
  for (std::size_t i = 0; i < packed_.size(); ++i) packed_[i] -= other.packed_[i];
  return *this;
}

SymMatrix& SymMatrix::operator*=(double s) {
  for (double& v : packed_) v *= s;
  return *this;
}

SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }

double SymMatrix::trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) t += (*this)(i, i);
  return t;
}

bool SymMatrix::all_finite() const {
  return std::all_of(packed_.begin(), packed_.end(), [](double v) { return std::isfinite(v); });
}

Matrix SymMatrix::to_dense() const {
  Matrix m(dim_, dim_);
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = 0; j < dim_; ++j) m(i, j) = (*this)(i, j);
  return m;
}

namespace {

double off_diagonal_mass(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

// Zeroes a(p, q) with a single Jacobi rotation and accumulates it into v.
void rotate(Matrix& a, Matrix& v, std::size_t p, std::size_t q) {
  const double apq = a(p, q);
  const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
  const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;
  const std::size_t d = a.rows();

  for (std::size_t k = 0; k < d; ++k) {
    const double akp = a(k, p);
    const double akq = a(k, q);
    a(k, p) = c * akp - s * akq;
    a(k, q) = s * akp + c * akq;
  }
  for (std::size_t k = 0; k < d; ++k) {
    const double apk = a(p, k);
    const double aqk = a(q, k);
    a(p, k) = c * apk - s * aqk;
    a(q, k) = s * apk + c * aqk;
  }
  a(p, q) = 0.0;
  a(q, p) = 0.0;

  for (std::size_t k = 0; k < d; ++k) {
    const double vkp = v(k, p);
    const double vkq = v(k, q);
    v(k, p) = c * vkp - s * vkq;
    v(k, q) = s * vkp + c * vkq;
  }
}

}  // namespace

EigenDecomposition sym_eig(const SymMatrix& a) {
  require(a.all_finite(), "sym_eig: matrix has non-finite entries");
  const std::size_t d = a.dim();
  Matrix work = a.to_dense();
  Matrix vecs = Matrix::identity(d);

  const double scale = hs_norm(a);
  const double tol = 1e-12 * scale;
  constexpr int kMaxSweeps = 100;

  bool converged = scale == 0.0;
  for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
    if (off_diagonal_mass(work) < tol) {
      converged = true;
      break;
    }
    for (std::size_t p = 0; p + 1 < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        if (work(p, q) != 0.0) rotate(work, vecs, p, q);
      }
    }
  }
  if (!converged && off_diagonal_mass(work) >= tol) {
    fail(ErrorCode::convergence_failure,
         "sym_eig: Jacobi iteration did not converge in " + std::to_string(kMaxSweeps) +
             " sweeps");
  }

  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return work(i, i) > work(j, j); });

  EigenDecomposition out;
  out.values.resize(d);
  out.vectors = Matrix(d, d);
  for (std::size_t c = 0; c < d; ++c) {
    const std::size_t src = order[c];
    out.values[c] = work(src, src);

    std::size_t lead = 0;
    for (std::size_t r = 1; r < d; ++r)
      if (std::abs(vecs(r, src)) > std::abs(vecs(lead, src))) lead = r;
    const double sign = vecs(lead, src) < 0.0 ? -1.0 : 1.0;
    for (std::size_t r = 0; r < d; ++r) out.vectors(r, c) = sign * vecs(r, src);
  }
  return out;
}

double hs_norm(const SymMatrix& a) {
  require(a.all_finite(), "hs_norm: matrix has non-finite entries");
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    for (std::size_t j = 0; j < a.dim(); ++j) s += a(i, j) * a(i, j);
  }
  return std::sqrt(s);
}

double operator_norm(const SymMatrix& a) {
  if (a.dim() == 0) return 0.0;
  const auto eig = sym_eig(a);
  return std::max(std::abs(eig.values.front()), std::abs(eig.values.back()));
}

double trace(const SymMatrix& a) { return a.trace(); }

double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

}  // namespace xpca
