#pragma once

// Empirical spectral-measure estimators, with and without a PCA projection
// step, and the tail functionals they are used to estimate.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xpca/epca.hpp"

namespace xpca {

/// Weighted atoms on the unit sphere. Total mass may be below one for the
/// projected estimator, where atoms whose projected norm falls below the
/// threshold are dropped.
struct SpectralMeasureEstimate {
  std::size_t d = 0;
  std::vector<double> atoms;  ///< size() x d, each of unit norm
  std::vector<double> weights;
  std::size_t k = 0;
  std::optional<std::size_t> k_fit;
  std::optional<Subspace> subspace;

  std::size_t size() const noexcept { return weights.size(); }
  std::span<const double> atom(std::size_t i) const { return {atoms.data() + i * d, d}; }
  double total_mass() const;
};

/// Equal mass 1/k on x / ||x|| for the k largest observations.
SpectralMeasureEstimate spectral_standard(const Sample& s, std::size_t k);
SpectralMeasureEstimate spectral_standard(const Sample& s, std::span<const std::size_t> order,
                                          std::size_t k);

struct ProjectionOptions {
  /// Project onto the orthogonal complement of the fitted subspace instead.
  bool project_complement = false;
};

/// Fits V on the k_fit largest observations, then puts mass 1/k on
/// theta(Pi_V X_i) for each of the k largest rows with ||Pi_V X_i|| above the
/// empirical threshold t_{n,k} computed from the original norms.
SpectralMeasureEstimate spectral_pca(const Sample& s, std::size_t k, std::size_t k_fit,
                                     std::size_t p, ProjectionOptions opts = {});

/// Projection step for a subspace that is already fitted.
SpectralMeasureEstimate spectral_project(const Sample& s, std::span<const std::size_t> order,
                                         std::size_t k, const Subspace& v,
                                         ProjectionOptions opts = {});

struct TailFunctional {
  enum class Kind {
    mean_contribution,   ///< (i)   H{x : p^{-1} sum_{j<=p} x_j > t}
    joint_exceedance,    ///< (ii)  int ((min_{j<=p} x_j)^a - (max_{j>p} x_j)^a)_+ dH
    conditional_single,  ///< (iii) int x_1^a dH / int (max_j x_j)^a dH
    min_contribution,    ///< (iv)  int (min_j x_j)^a dH
  };
  /// Coordinates entering the denominator maximum of kind (iii).
  enum class MaxScope { all, first_p };

  Kind kind = Kind::mean_contribution;
  double alpha = 1.0;
  std::size_t p_split = 1;
  double t_i = 0.5;
  MaxScope max_scope = MaxScope::all;

  /// Checks the parameter constraints for an ambient dimension d.
  void validate(std::size_t d) const;
};

/// Coordinates are clamped at zero before powers. Throws
/// Error(undefined_result) when the kind (iii) denominator vanishes.
double evaluate_functional(const SpectralMeasureEstimate& h, const TailFunctional& f);

const char* to_string(TailFunctional::Kind kind) noexcept;
/// Accepts "i".."iv" and the long names.
TailFunctional::Kind parse_functional_kind(const std::string& name);

}  // namespace xpca
