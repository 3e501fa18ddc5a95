#pragma once

// Synthetic regularly varying models whose angular measure concentrates on
// span(e_1, ..., e_p), plus a Monte Carlo oracle for the limiting tail
// probabilities estimated from them.

#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xpca/epca.hpp"
#include "xpca/linalg.hpp"
#include "xpca/rng.hpp"
#include "xpca/spectral.hpp"

namespace xpca {

struct SyntheticModel {
  enum class Kind { dirichlet, gumbel, dirichlet_rotated };

  Kind kind = Kind::dirichlet;
  std::size_t d = 10;
  std::size_t p = 2;
  double alpha_tail = 1.0;
  std::vector<double> dirichlet_params;  ///< p entries, Dirichlet kinds only
  double gumbel_theta = 1.0;
  double noise_variance = 1.0;  ///< per coordinate, before taking the modulus
  double noise_correlation = 0.2;
  double rotation_max_angle = std::numbers::pi / 10.0;

  void validate() const;

  /// Dirichlet(param, ..., param) angular core with default noise.
  static SyntheticModel dirichlet(std::size_t d, std::size_t p, double alpha_tail = 1.0,
                                  double param = 3.0);
  static SyntheticModel gumbel(std::size_t d, std::size_t p, double alpha_tail, double theta);
  static SyntheticModel dirichlet_rotated(std::size_t d, std::size_t p, double alpha_tail = 1.0,
                                          double param = 3.0);
};

/// 1e5/d for alpha = 1 and 10/d for alpha = 2; other tail indices need an
/// explicit variance.
double default_noise_variance(double alpha_tail, std::size_t d);

const char* to_string(SyntheticModel::Kind kind) noexcept;
SyntheticModel::Kind parse_model_kind(const std::string& name);

/// R * S with S ~ Dirichlet(params) and R unit Pareto(alpha_tail) on [radial_floor, inf).
std::vector<double> sample_dirichlet_core(std::size_t p, std::span<const double> params,
                                          double alpha_tail, RngStream& rng,
                                          double radial_floor = 1.0);

/// Positive stable variable with Laplace transform exp(-s^a), a in (0, 1],
/// drawn with Kanter's exact representation.
double sample_positive_stable(double a, RngStream& rng);

/// Uniforms with Gumbel copula C_theta via the frailty construction
/// U_i = exp(-(E_i / V)^{1/theta}).
std::vector<double> sample_gumbel_uniforms(std::size_t p, double theta, RngStream& rng);

/// Gumbel-copula vector with Frechet(alpha_tail) margins: x_i = (-log U_i)^{-1/alpha}.
std::vector<double> sample_gumbel_core(std::size_t p, double theta, double alpha_tail,
                                       RngStream& rng);

/// Draws rows of a model. Holds the Cholesky factor of the noise covariance.
class ModelSampler {
 public:
  explicit ModelSampler(SyntheticModel model);

  const SyntheticModel& model() const noexcept { return model_; }

  /// One observation: heavy-tailed core in the first p coordinates (rotated
  /// for the rotated kind) plus the modulus of correlated Gaussian noise.
  /// `radial_floor` > 1 draws the Pareto radius conditionally on exceeding
  /// it (Dirichlet kinds only).
  void draw(RngStream& rng, std::span<double> out, double radial_floor = 1.0) const;

  /// Core part only, embedded in R^d.
  void draw_core(RngStream& rng, std::span<double> out, double radial_floor = 1.0) const;

  /// Correlated Gaussian noise before the modulus is taken.
  void draw_noise_premodulus(RngStream& rng, std::span<double> out) const;

  /// Covariance of the pre-modulus noise.
  SymMatrix noise_covariance() const;

 private:
  SyntheticModel model_;
  Matrix chol_;  ///< lower triangular
};

/// Applies a rotation by `angle` in the (axis_a, axis_b) coordinate plane.
void rotate_in_plane(std::span<double> x, std::size_t axis_a, std::size_t axis_b, double angle);

Sample sample_model(const SyntheticModel& m, std::size_t n, RngStream& rng);

struct OracleOptions {
  enum class Mode {
    automatic,    ///< radial_tail for Dirichlet kinds, direct otherwise
    direct,       ///< plain draws; u set so that about target_events rows condition
    radial_tail,  ///< Pareto radius drawn above a floor that contains every conditioning event
  };

  std::size_t n_mc = 10'000'000;
  std::optional<double> u;
  std::size_t target_events = 10'000;
  Mode mode = Mode::automatic;
  std::size_t shards = 64;
  unsigned threads = 0;
};

struct OracleResult {
  double estimate = 0.0;
  double std_error = 0.0;
  double u = 0.0;
  std::size_t events = 0;  ///< conditioning events observed
  std::size_t hits = 0;
  std::size_t n_mc = 0;
  OracleOptions::Mode mode = OracleOptions::Mode::direct;
};

/// Conditional probability of the pre-limit event behind functional f at
/// level u:
///   (i)   mean_{j<=p} X_j / ||X|| > t          given ||X|| > u
///   (ii)  min_{j<=p} X_j > u, max_{j>p} X_j <= u given ||X|| > u
///   (iii) X_1 > u                              given max_j X_j > u
///   (iv)  min_j X_j > u                        given ||X|| > u
/// Throws Error(insufficient_exceedances) below 100 conditioning events.
OracleResult mc_oracle(const SyntheticModel& m, const TailFunctional& f, const OracleOptions& opts,
                       std::uint64_t seed);

/// Several functionals from one set of draws.
std::vector<OracleResult> mc_oracle(const SyntheticModel& m, std::span<const TailFunctional> fs,
                                    const OracleOptions& opts, std::uint64_t seed);

const char* to_string(OracleOptions::Mode mode) noexcept;

/// Oracle shards use stream ids from this offset upward, away from the
/// per-replication streams 0, 1, 2, ...
inline constexpr std::uint64_t kOracleStreamBase = std::uint64_t{1} << 40;

}  // namespace xpca
