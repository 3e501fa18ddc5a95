#pragma once

// Replicated simulation study: risk curves, subspace errors and RMSE of the
// spectral-measure based estimators over a grid of k.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xpca/simulate.hpp"
#include "xpca/spectral.hpp"

namespace xpca {

enum class Estimator { standard, pca, pca_small };

const char* to_string(Estimator e) noexcept;
Estimator parse_estimator(const std::string& name);

struct ExperimentConfig {
  SyntheticModel model;
  std::size_t n = 1000;
  std::size_t replications = 200;
  std::vector<std::size_t> k_grid = default_k_grid();
  std::size_t p_tilde_max = 10;
  /// Dimension used by the PCA estimators and for the subspace error; 0 means model.p.
  std::size_t estimator_p = 0;
  std::size_t k_fit_small = 10;
  std::vector<Estimator> estimators{Estimator::standard, Estimator::pca, Estimator::pca_small};
  std::vector<TailFunctional> functionals;
  std::uint64_t base_seed = 0;
  OracleOptions oracle;
  /// Known truths, one per functional; skips the oracle when set.
  std::optional<std::vector<double>> truths;
  bool project_complement = false;
  unsigned threads = 0;

  void validate() const;
  std::size_t pca_dim() const noexcept { return estimator_p == 0 ? model.p : estimator_p; }
};

/// Functionals (i)-(iv) with the settings used for a model: p_split = model.p,
/// alpha = model tail index, and the given threshold for (i).
std::vector<TailFunctional> standard_functionals(const SyntheticModel& m, double t_i);

struct RmseCell {
  std::size_t k = 0;
  Estimator estimator = Estimator::standard;
  std::size_t functional = 0;  ///< index into ExperimentConfig::functionals
  double rmse = 0.0;
  double mean = 0.0;
  std::size_t used = 0;
  std::size_t excluded = 0;  ///< replications where the estimate was undefined
};

struct ExperimentResult {
  std::vector<std::size_t> k_grid;
  std::size_t p_tilde_max = 0;
  std::size_t replications = 0;
  /// [k index][p~ - 1]
  std::vector<std::vector<double>> mean_risk;
  /// Risk curve of replication 0 alone.
  std::vector<std::vector<double>> single_risk;
  /// Mean rho(V_hat, span(e_1..e_p)) per k.
  std::vector<double> mean_rho;
  std::vector<RmseCell> rmse;
  std::vector<OracleResult> truth;  ///< one per functional; estimate only when truths were given
};

/// Per-replication quantities, exposed for testing.
struct ReplicationResult {
  std::vector<std::vector<double>> risk;  ///< [k index][p~ - 1]
  std::vector<double> rho;                ///< [k index]
  /// [k index][estimator index][functional index]; NaN when undefined.
  std::vector<std::vector<std::vector<double>>> values;
};

ReplicationResult run_replication(const ExperimentConfig& cfg, std::size_t r);

ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Published limit of a functional for one of the reference settings.
struct ReferenceLimit {
  TailFunctional::Kind kind;
  double t_i = 0.0;  ///< threshold of kind (i); unused otherwise
  double value = 0.0;
};

/// Limits reported for the original simulation study: Dirichlet(3, 3) with
/// p = 2, d = 10, alpha = 1, and the Gumbel model with theta = 2, p = 2,
/// d = 10, alpha = 2. Empty for any other model. The Dirichlet generator here
/// is a substitute, so these are cross-checks, not ground truth.
std::vector<ReferenceLimit> reference_limits(const SyntheticModel& m);

/// Absolute tolerance used when comparing oracle values with reference_limits.
inline constexpr double kReferenceTolerance = 0.05;

/// sqrt(mean((v - truth)^2)); throws on empty input.
double rmse(std::span<const double> values, double truth);

}  // namespace xpca
