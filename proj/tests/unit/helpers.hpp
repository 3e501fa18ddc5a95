#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "xpca/epca.hpp"
#include "xpca/linalg.hpp"

namespace xpca::test {

inline std::vector<double> random_unit(std::mt19937_64& gen, std::size_t d) {
  std::normal_distribution<double> z;
  std::vector<double> x(d);
  double s = 0.0;
  for (auto& v : x) {
    v = z(gen);
    s += v * v;
  }
  for (auto& v : x) v /= std::sqrt(s);
  return x;
}

inline SymMatrix random_symmetric(std::mt19937_64& gen, std::size_t d) {
  std::normal_distribution<double> z;
  SymMatrix a(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j <= i; ++j) a.set(i, j, z(gen));
  return a;
}

inline Subspace random_subspace(std::mt19937_64& gen, std::size_t d, std::size_t p) {
  std::vector<std::vector<double>> vs;
  for (std::size_t i = 0; i < p; ++i) vs.push_back(random_unit(gen, d));
  return Subspace::span_of(d, vs);
}

/// Random orthogonal matrix (columns of Gram-Schmidt on Gaussian vectors).
inline Matrix random_orthogonal(std::mt19937_64& gen, std::size_t d) {
  const auto s = random_subspace(gen, d, d);
  Matrix q(d, d);
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t i = 0; i < d; ++i) q(i, j) = s.basis()[j][i];
  return q;
}

inline AngularCloud random_cloud(std::mt19937_64& gen, std::size_t d, std::size_t k) {
  std::vector<std::vector<double>> pts;
  for (std::size_t i = 0; i < k; ++i) pts.push_back(random_unit(gen, d));
  return AngularCloud::from_points(pts);
}

/// Cloud concentrated near a random p-dimensional subspace.
inline AngularCloud anisotropic_cloud(std::mt19937_64& gen, std::size_t d, std::size_t k,
                                      double spread) {
  std::normal_distribution<double> z;
  std::vector<std::vector<double>> pts;
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<double> x(d);
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      x[j] = z(gen) * std::pow(spread, static_cast<double>(j));
      s += x[j] * x[j];
    }
    for (auto& v : x) v /= std::sqrt(s);
    pts.push_back(x);
  }
  return AngularCloud::from_points(pts);
}

}  // namespace xpca::test
