#pragma once

// Finite-sample uniform risk bounds and conditional confidence bands for the
// reconstruction risk over all p-dimensional subspaces.

#include <cstddef>

#include "xpca/epca.hpp"

namespace xpca {

struct BoundStatistics {
  /// (1/l) sum ||theta_i||^4 - tr(Sigma^2), Sigma = (1/l) sum theta theta^T.
  /// Also equals (2 l^2)^{-1} sum_{i,j} ||theta_i theta_i^T - theta_j theta_j^T||_HS^2.
  double s_tilde = 0.0;
  std::size_t ell = 0;  ///< exceedance count
  std::size_t p = 0;
  std::size_t d = 0;
  std::size_t k = 0;
  std::size_t n = 0;

  /// min(p, d - p)
  std::size_t complexity() const noexcept { return p < d - p ? p : d - p; }
};

/// Requires every theta to have norm at most 1. Negative roundoff is clamped to 0.
BoundStatistics s_statistic(const AngularCloud& c, std::size_t p);

/// High-probability bound on sup_V |R_{n,k}(V) - R_{t_{n,k}}(V)|:
///
///   sqrt(min(p, d-p) S / k) + sqrt(8 (1 + k/n) log(4/delta) / k) + 4 log(4/delta) / (3k)
///
/// S is the population fourth-moment statistic in the underlying result; it
/// cannot be observed, so the empirical s_tilde is plugged in. The value is
/// not clamped: for small k it can exceed the trivial bound 1 on the risk.
double uniform_bound(const BoundStatistics& b, double delta);

/// Twice the uniform bound: controls R(V_hat) - inf_V R(V).
double excess_risk_bound(const BoundStatistics& b, double delta);

struct ConfidenceBand {
  double half_width = 0.0;  ///< +inf when ell < 2
  double u = 0.0;
  double v = 0.0;  ///< +inf when min(p, d-p) = 0 (the v-term then vanishes)
  double level = 0.0;
  std::size_t ell = 0;
  double split = 0.0;  ///< share of the failure mass 1 - level assigned to the u-term

  bool bounded() const noexcept;
};

/// Half width
///   sqrt(c S~/(l-1)) + sqrt(c v/l) + u,   c = min(p, d-p),
/// for a given split gamma of the failure mass:
///   2 exp(-2 l u^2) = gamma (1 - level),  exp(-floor(l/2) v^2 / 2) = (1 - gamma)(1 - level).
ConfidenceBand band_for_split(const BoundStatistics& b, double level, double split);

/// Minimizes the half width over the split (dense grid then golden section).
/// Coverage follows the convention that the band holds with probability at
/// least `level`, i.e. the exponential terms sum to 1 - level.
ConfidenceBand calibrate_band(const BoundStatistics& b, double level);

/// 2 exp(-2 l u^2) + exp(-floor(l/2) v^2 / 2) - (1 - level)
double band_constraint_residual(const ConfidenceBand& band);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;  ///< +inf for the unbounded band
  bool bounded() const noexcept;
};

struct BandReport {
  double empirical_risk = 0.0;
  BoundStatistics stats;
  ConfidenceBand band;
  Interval interval;
};

/// [R_hat(V) - B, R_hat(V) + B] intersected with [0, inf); [0, inf) when ell < 2.
BandReport confidence_band(const AngularCloud& c, const Subspace& v, double level);

}  // namespace xpca
