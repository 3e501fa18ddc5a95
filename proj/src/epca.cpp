#include "xpca/epca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "xpca/error.hpp"
#include "xpca/parallel.hpp"

namespace xpca {

Sample::Sample(std::size_t n, std::size_t d, std::vector<double> data)
    : n_(n), d_(d), data_(std::move(data)), norms_(n) {
  require(n >= 1, "Sample: need at least one observation");
  require(d >= 2, "Sample: dimension must be at least 2");
  require(data_.size() == n * d, "Sample: data size does not match n x d");
  for (std::size_t i = 0; i < n_; ++i) {
    for (double v : row(i)) {
      require(std::isfinite(v), "Sample: non-finite entry in row " + std::to_string(i));
    }
    norms_[i] = norm2(row(i));
  }
}

Sample Sample::from_rows(const std::vector<std::vector<double>>& rows) {
  require(!rows.empty(), "Sample: need at least one observation");
  const std::size_t d = rows.front().size();
  std::vector<double> data;
  data.reserve(rows.size() * d);
  for (const auto& r : rows) {
    require(r.size() == d, "Sample: rows have different lengths");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Sample(rows.size(), d, std::move(data));
}

ScalingFunction ScalingFunction::power_norm(double beta) {
  require(beta > 0.0 && beta <= 1.0, "power-norm scaling: beta must lie in (0, 1]");
  return {Kind::power_norm, beta};
}

ScalingFunction ScalingFunction::positive_orthant_power(double beta) {
  require(beta > 0.0 && beta <= 1.0, "positive-orthant scaling: beta must lie in (0, 1]");
  return {Kind::positive_orthant_power, beta};
}

double ScalingFunction::weight(std::span<const double> x) const { return weight(x, norm2(x)); }

double ScalingFunction::weight(std::span<const double> x, double norm) const {
  require(norm > 0.0, "scaling function is undefined at the zero vector");
  switch (kind) {
    case Kind::inverse_norm:
      return 1.0 / norm;
    case Kind::power_norm:
      return std::pow(norm, -beta);
    case Kind::positive_orthant_power:
      for (double v : x)
        if (v < 0.0) return 0.0;
      return std::pow(norm, -beta);
  }
  return 0.0;
}

std::vector<double> rescale(std::span<const double> x, const ScalingFunction& w) {
  const double omega = w.weight(x);
  std::vector<double> out(x.begin(), x.end());
  for (double& v : out) v *= omega;
  return out;
}

std::vector<std::size_t> rank_by_norm(const Sample& s) {
  std::vector<std::size_t> order(s.n());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto& norms = s.norms();
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });
  return order;
}

AngularCloud AngularCloud::from_points(const std::vector<std::vector<double>>& points) {
  require(!points.empty(), "AngularCloud: no points");
  AngularCloud c;
  c.d = points.front().size();
  c.k = points.size();
  c.n = points.size();
  for (std::size_t i = 0; i < points.size(); ++i) {
    require(points[i].size() == c.d, "AngularCloud: points have different lengths");
    c.thetas.insert(c.thetas.end(), points[i].begin(), points[i].end());
    c.indices.push_back(i);
  }
  return c;
}

AngularCloud select_exceedances(const Sample& s, std::size_t k, const ScalingFunction& w) {
  const auto order = rank_by_norm(s);
  return select_exceedances(s, order, k, w);
}

AngularCloud select_exceedances(const Sample& s, std::span<const std::size_t> order,
                                std::size_t k, const ScalingFunction& w) {
  require(k >= 1 && k < s.n(), "select_exceedances: need 1 <= k < n (k=" + std::to_string(k) +
                                   ", n=" + std::to_string(s.n()) + ")");
  require(order.size() == s.n(), "select_exceedances: ordering does not match the sample");

  AngularCloud c;
  c.d = s.d();
  c.k = k;
  c.n = s.n();
  c.threshold = s.norm(order[k]);
  c.thetas.reserve(k * s.d());
  c.indices.reserve(k);
  for (std::size_t r = 0; r < k; ++r) {
    const std::size_t i = order[r];
    const double nrm = s.norm(i);
    if (nrm == c.threshold) ++c.threshold_ties;
    require(nrm > 0.0, "select_exceedances: fewer than k non-zero observations");
    const double omega = w.weight(s.row(i), nrm);
    if (omega == 0.0) {
      ++c.dropped;
      continue;
    }
    for (double v : s.row(i)) c.thetas.push_back(omega * v);
    c.indices.push_back(i);
  }
  return c;
}

SymMatrix second_moment(const AngularCloud& c) {
  require(c.k >= 1, "second_moment: empty cloud");
  SymMatrix sigma(c.d);
  for (std::size_t i = 0; i < c.size(); ++i) sigma.add_outer(c.theta(i));
  sigma *= 1.0 / static_cast<double>(c.k);
  return sigma;
}

Subspace::Subspace(std::size_t ambient_dim, std::vector<std::vector<double>> basis)
    : d_(ambient_dim), basis_(std::move(basis)) {
  require(!basis_.empty() && basis_.size() <= d_,
          "Subspace: dimension p must satisfy 1 <= p <= d");
  for (const auto& b : basis_) require(b.size() == d_, "Subspace: basis vector has wrong length");
  for (std::size_t i = 0; i < basis_.size(); ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double target = i == j ? 1.0 : 0.0;
      require(std::abs(dot(basis_[i], basis_[j]) - target) <= 1e-10,
              "Subspace: basis is not orthonormal");
    }
  }
}

Subspace Subspace::span_of(std::size_t ambient_dim,
                           const std::vector<std::vector<double>>& vectors) {
  std::vector<std::vector<double>> basis;
  for (const auto& v : vectors) {
    require(v.size() == ambient_dim, "Subspace::span_of: vector has wrong length");
    std::vector<double> u = v;
    const double original = norm2(u);
    require(original > 0.0, "Subspace::span_of: zero vector");
    // Two MGS passes keep the result orthonormal to roundoff.
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& b : basis) {
        const double c = dot(u, b);
        for (std::size_t i = 0; i < u.size(); ++i) u[i] -= c * b[i];
      }
    }
    const double nrm = norm2(u);
    require(nrm > 1e-10 * original, "Subspace::span_of: vectors are linearly dependent");
    for (double& x : u) x /= nrm;
    basis.push_back(std::move(u));
  }
  return Subspace(ambient_dim, std::move(basis));
}

Subspace Subspace::coordinate(std::size_t ambient_dim, std::size_t p) {
  std::vector<std::vector<double>> basis(p, std::vector<double>(ambient_dim, 0.0));
  for (std::size_t i = 0; i < p && i < ambient_dim; ++i) basis[i][i] = 1.0;
  return Subspace(ambient_dim, std::move(basis));
}

SymMatrix Subspace::projection() const {
  SymMatrix pi(d_);
  for (const auto& b : basis_) pi.add_outer(b);
  return pi;
}

std::vector<double> Subspace::project(std::span<const double> x) const {
  require(x.size() == d_, "Subspace::project: dimension mismatch");
  std::vector<double> out(d_, 0.0);
  for (const auto& b : basis_) {
    const double c = dot(x, b);
    for (std::size_t i = 0; i < d_; ++i) out[i] += c * b[i];
  }
  return out;
}

double Subspace::residual_sq(std::span<const double> x) const {
  const auto px = project(x);
  double s = 0.0;
  for (std::size_t i = 0; i < d_; ++i) s += (x[i] - px[i]) * (x[i] - px[i]);
  return s;
}

double empirical_risk(const AngularCloud& c, const Subspace& v) {
  require(v.ambient_dim() == c.d, "empirical_risk: dimension mismatch");
  require(c.k >= 1, "empirical_risk: empty cloud");
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) s += v.residual_sq(c.theta(i));
  return s / static_cast<double>(c.k);
}

double empirical_risk(const SymMatrix& sigma, const Subspace& v) {
  require(v.ambient_dim() == sigma.dim(), "empirical_risk: dimension mismatch");
  const std::size_t d = sigma.dim();
  double captured = 0.0;
  std::vector<double> su(d);
  for (const auto& u : v.basis()) {
    for (std::size_t i = 0; i < d; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) acc += sigma(i, j) * u[j];
      su[i] = acc;
    }
    captured += dot(u, su);
  }
  return std::max(0.0, sigma.trace() - captured);
}

std::vector<double> tail_sums(std::span<const double> eigenvalues) {
  const std::size_t d = eigenvalues.size();
  std::vector<double> tails(d + 1, 0.0);
  for (std::size_t i = d; i-- > 0;) tails[i] = tails[i + 1] + std::max(0.0, eigenvalues[i]);
  return tails;
}

SubspaceFit fit_subspace(const SymMatrix& sigma, std::size_t p) {
  require(p >= 1 && p <= sigma.dim(), "fit_subspace: need 1 <= p <= d");
  return fit_subspace(sym_eig(sigma), p);
}

SubspaceFit fit_subspace(const EigenDecomposition& eig, std::size_t p) {
  const std::size_t d = eig.values.size();
  require(p >= 1 && p <= d, "fit_subspace: need 1 <= p <= d");
  std::vector<std::vector<double>> basis;
  basis.reserve(p);
  for (std::size_t j = 0; j < p; ++j) basis.push_back(eig.vectors.column(j));
  const bool tie = p < d && eig.values[p - 1] - eig.values[p] < 1e-10;
  return SubspaceFit{Subspace(d, std::move(basis)), eig.values, tail_sums(eig.values)[p], tie};
}

double subspace_distance(const Subspace& v, const Subspace& w) {
  require(v.ambient_dim() == w.ambient_dim(), "subspace_distance: ambient dimensions differ");
  require(v.p() == w.p(), "subspace_distance: subspace dimensions differ");
  const double rho = operator_norm(v.projection() - w.projection());
  return std::min(1.0, rho);
}

double hausdorff_bound(double rho) {
  require(rho >= 0.0 && rho <= 1.0, "hausdorff_bound: rho must lie in [0, 1]");
  return std::sqrt(2.0 * (1.0 - std::sqrt(1.0 - rho * rho)));
}

std::vector<RiskCurveRow> risk_curve(const Sample& s, const ScalingFunction& w,
                                     std::span<const std::size_t> k_grid, std::size_t p_max,
                                     unsigned threads) {
  require(p_max >= 1 && p_max <= s.d(), "risk_curve: need 1 <= p_max <= d");
  std::vector<std::size_t> ks(k_grid.begin(), k_grid.end());
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  for (std::size_t k : ks) require(k >= 1 && k < s.n(), "risk_curve: every k must satisfy 1 <= k < n");

  const auto order = rank_by_norm(s);
  std::vector<std::vector<double>> tails(ks.size());
  parallel_for(ks.size(), threads, [&](std::size_t i) {
    const auto cloud = select_exceedances(s, order, ks[i], w);
    tails[i] = tail_sums(sym_eig(second_moment(cloud)).values);
  });

  std::vector<RiskCurveRow> rows;
  rows.reserve(ks.size() * p_max);
  for (std::size_t i = 0; i < ks.size(); ++i) {
    for (std::size_t p = 1; p <= p_max; ++p) rows.push_back({ks[i], p, tails[i][p]});
  }
  return rows;
}

std::vector<std::size_t> default_k_grid() {
  std::vector<std::size_t> ks;
  for (std::size_t k = 5; k <= 200; k += 5) ks.push_back(k);
  return ks;
}

}  // namespace xpca
