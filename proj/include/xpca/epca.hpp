#pragma once

// Extreme-value PCA: exceedance selection, angular second moments,
// reconstruction risk and subspace fitting.

#include <cstddef>
#include <span>
#include <vector>

#include "xpca/linalg.hpp"

namespace xpca {

/// n observations in R^d with cached Euclidean row norms.
class Sample {
 public:
  Sample(std::size_t n, std::size_t d, std::vector<double> data);
  static Sample from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t n() const noexcept { return n_; }
  std::size_t d() const noexcept { return d_; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * d_, d_}; }
  double norm(std::size_t i) const { return norms_[i]; }
  const std::vector<double>& norms() const noexcept { return norms_; }
  const std::vector<double>& data() const noexcept { return data_; }

 private:
  std::size_t n_;
  std::size_t d_;
  std::vector<double> data_;
  std::vector<double> norms_;
};

/// The weight omega(x) in theta(x) = omega(x) x.
struct ScalingFunction {
  enum class Kind { inverse_norm, power_norm, positive_orthant_power };

  Kind kind = Kind::inverse_norm;
  double beta = 1.0;

  static ScalingFunction inverse_norm() { return {Kind::inverse_norm, 1.0}; }
  static ScalingFunction power_norm(double beta);
  static ScalingFunction positive_orthant_power(double beta);

  /// omega(x); zero outside the positive orthant for positive_orthant_power.
  double weight(std::span<const double> x) const;
  double weight(std::span<const double> x, double norm) const;
};

/// theta(x) = omega(x) x. Throws on the zero vector.
std::vector<double> rescale(std::span<const double> x, const ScalingFunction& w);

/// Row indices sorted by decreasing norm, ties broken by increasing index.
std::vector<std::size_t> rank_by_norm(const Sample& s);

/// The rescaled k largest observations and the threshold they exceed.
struct AngularCloud {
  std::size_t d = 0;
  std::size_t k = 0;  ///< exceedance count; normalizes every empirical average
  std::size_t n = 0;
  double threshold = 0.0;  ///< norm of the (k+1)-th largest observation
  std::vector<double> thetas;  ///< size() x d, row-major
  std::vector<std::size_t> indices;  ///< source rows of the stored thetas
  std::size_t threshold_ties = 0;  ///< selected rows whose norm equals the threshold
  std::size_t dropped = 0;  ///< exceedances mapped to 0 by the scaling (positive orthant)

  std::size_t size() const noexcept { return indices.size(); }
  std::span<const double> theta(std::size_t i) const { return {thetas.data() + i * d, d}; }

  /// Builds a cloud directly from already rescaled points (threshold unknown).
  static AngularCloud from_points(const std::vector<std::vector<double>>& points);
};

/// Selects the k largest observations. Ties at the threshold are broken by
/// row index so exactly k rows are always taken; `threshold_ties` records it.
AngularCloud select_exceedances(const Sample& s, std::size_t k, const ScalingFunction& w);
AngularCloud select_exceedances(const Sample& s, std::span<const std::size_t> order,
                                std::size_t k, const ScalingFunction& w);

/// (1/k) sum theta theta^T.
SymMatrix second_moment(const AngularCloud& c);

class Subspace {
 public:
  /// `basis` holds p rows of length d that must be orthonormal to 1e-10.
  Subspace(std::size_t ambient_dim, std::vector<std::vector<double>> basis);

  /// Orthonormalizes arbitrary spanning vectors (modified Gram-Schmidt).
  static Subspace span_of(std::size_t ambient_dim, const std::vector<std::vector<double>>& vectors);
  /// span(e_1, ..., e_p)
  static Subspace coordinate(std::size_t ambient_dim, std::size_t p);

  std::size_t ambient_dim() const noexcept { return d_; }
  std::size_t p() const noexcept { return basis_.size(); }
  const std::vector<std::vector<double>>& basis() const noexcept { return basis_; }

  SymMatrix projection() const;
  std::vector<double> project(std::span<const double> x) const;
  /// ||Pi_V^perp x||^2
  double residual_sq(std::span<const double> x) const;

 private:
  std::size_t d_;
  std::vector<std::vector<double>> basis_;
};

/// (1/k) sum ||Pi_V^perp theta_i||^2 evaluated point by point.
double empirical_risk(const AngularCloud& c, const Subspace& v);
/// Same risk via tr(Sigma) - tr(U^T Sigma U) for a precomputed second moment.
double empirical_risk(const SymMatrix& sigma, const Subspace& v);

struct SubspaceFit {
  Subspace subspace;
  std::vector<double> eigenvalues;
  double risk = 0.0;  ///< sum of the eigenvalues beyond p
  bool non_unique = false;  ///< lambda_p - lambda_{p+1} < 1e-10
};

SubspaceFit fit_subspace(const SymMatrix& sigma, std::size_t p);
SubspaceFit fit_subspace(const EigenDecomposition& eig, std::size_t p);

/// Operator norm of Pi_V - Pi_W.
double subspace_distance(const Subspace& v, const Subspace& w);

/// Upper bound on the Hausdorff distance between the unit spheres of two
/// subspaces at distance rho: sqrt(2 (1 - sqrt(1 - rho^2))).
double hausdorff_bound(double rho);

struct RiskCurveRow {
  std::size_t k = 0;
  std::size_t p_tilde = 0;
  double risk = 0.0;
};

/// Empirical risk of the best p~-dimensional subspace for every k in
/// `k_grid` and p~ = 1..p_max; rows sorted by (k, p~).
std::vector<RiskCurveRow> risk_curve(const Sample& s, const ScalingFunction& w,
                                     std::span<const std::size_t> k_grid, std::size_t p_max,
                                     unsigned threads = 0);

/// Sums of the eigenvalues beyond each p~ (negative roundoff clamped to 0):
/// entry p~ for p~ = 0..d.
std::vector<double> tail_sums(std::span<const double> eigenvalues);

/// {5, 10, ..., 200}
std::vector<std::size_t> default_k_grid();

}  // namespace xpca
