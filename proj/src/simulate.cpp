#include "xpca/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <string>

#include "xpca/error.hpp"
#include "xpca/parallel.hpp"

namespace xpca {

void SyntheticModel::validate() const {
  require(p >= 1 && p < d, "model: need 1 <= p < d");
  require(alpha_tail > 0.0, "model: tail index must be positive");
  require(noise_variance > 0.0 && std::isfinite(noise_variance),
          "model: noise variance must be positive");
  require(noise_correlation > -1.0 / static_cast<double>(d - 1) && noise_correlation < 1.0,
          "model: noise correlation must keep the covariance positive definite");
  switch (kind) {
    case Kind::dirichlet:
    case Kind::dirichlet_rotated:
      require(dirichlet_params.size() == p, "model: need exactly p Dirichlet parameters");
      for (double a : dirichlet_params) require(a > 0.0, "model: Dirichlet parameters must be positive");
      if (kind == Kind::dirichlet_rotated) {
        require(rotation_max_angle >= 0.0, "model: rotation angle bound must be non-negative");
      }
      break;
    case Kind::gumbel:
      require(gumbel_theta >= 1.0, "model: Gumbel parameter must be >= 1");
      break;
  }
}

double default_noise_variance(double alpha_tail, std::size_t d) {
  require(d >= 1, "default_noise_variance: d must be positive");
  if (alpha_tail == 1.0) return 1e5 / static_cast<double>(d);
  if (alpha_tail == 2.0) return 10.0 / static_cast<double>(d);
  fail(ErrorCode::invalid_input,
       "no default noise variance for tail index " + std::to_string(alpha_tail) +
           "; set it explicitly");
}

SyntheticModel SyntheticModel::dirichlet(std::size_t d, std::size_t p, double alpha_tail,
                                         double param) {
  SyntheticModel m;
  m.kind = Kind::dirichlet;
  m.d = d;
  m.p = p;
  m.alpha_tail = alpha_tail;
  m.dirichlet_params.assign(p, param);
  m.noise_variance = default_noise_variance(alpha_tail, d);
  return m;
}

SyntheticModel SyntheticModel::gumbel(std::size_t d, std::size_t p, double alpha_tail,
                                      double theta) {
  SyntheticModel m;
  m.kind = Kind::gumbel;
  m.d = d;
  m.p = p;
  m.alpha_tail = alpha_tail;
  m.gumbel_theta = theta;
  m.noise_variance = default_noise_variance(alpha_tail, d);
  return m;
}

SyntheticModel SyntheticModel::dirichlet_rotated(std::size_t d, std::size_t p, double alpha_tail,
                                                 double param) {
  auto m = dirichlet(d, p, alpha_tail, param);
  m.kind = Kind::dirichlet_rotated;
  return m;
}

const char* to_string(SyntheticModel::Kind kind) noexcept {
  switch (kind) {
    case SyntheticModel::Kind::dirichlet:
      return "dirichlet";
    case SyntheticModel::Kind::gumbel:
      return "gumbel";
    case SyntheticModel::Kind::dirichlet_rotated:
      return "dirichlet-rotated";
  }
  return "?";
}

SyntheticModel::Kind parse_model_kind(const std::string& name) {
  if (name == "dirichlet") return SyntheticModel::Kind::dirichlet;
  if (name == "gumbel") return SyntheticModel::Kind::gumbel;
  if (name == "dirichlet-rotated") return SyntheticModel::Kind::dirichlet_rotated;
  fail(ErrorCode::invalid_input,
       "unknown model '" + name + "' (expected dirichlet, gumbel or dirichlet-rotated)");
}

std::vector<double> sample_dirichlet_core(std::size_t p, std::span<const double> params,
                                          double alpha_tail, RngStream& rng,
                                          double radial_floor) {
  require(params.size() == p, "sample_dirichlet_core: need p parameters");
  require(alpha_tail > 0.0, "sample_dirichlet_core: tail index must be positive");
  require(radial_floor >= 1.0, "sample_dirichlet_core: radial floor must be >= 1");
  std::vector<double> s(p);
  double total = 0.0;
  for (std::size_t i = 0; i < p; ++i) {
    require(params[i] > 0.0, "sample_dirichlet_core: parameters must be positive");
    s[i] = rng.gamma(params[i]);
    total += s[i];
  }
  const double radius = radial_floor * std::pow(rng.uniform(), -1.0 / alpha_tail);
  for (double& v : s) v = radius * v / total;
  return s;
}

double sample_positive_stable(double a, RngStream& rng) {
  require(a > 0.0 && a <= 1.0, "sample_positive_stable: index must lie in (0, 1]");
  if (a == 1.0) return 1.0;
  const double u = std::numbers::pi * rng.uniform();
  const double w = rng.exponential();
  return std::sin(a * u) / std::pow(std::sin(u), 1.0 / a) *
         std::pow(std::sin((1.0 - a) * u) / w, (1.0 - a) / a);
}

namespace {

// -log U_i for the Gumbel frailty construction: (E_i / V)^{1/theta}.
std::vector<double> gumbel_neglog_uniforms(std::size_t p, double theta, RngStream& rng) {
  require(theta >= 1.0, "Gumbel copula: theta must be >= 1");
  const double a = 1.0 / theta;
  const double v = sample_positive_stable(a, rng);
  std::vector<double> y(p);
  for (auto& yi : y) yi = std::pow(rng.exponential() / v, a);
  return y;
}

}  // namespace

std::vector<double> sample_gumbel_uniforms(std::size_t p, double theta, RngStream& rng) {
  auto y = gumbel_neglog_uniforms(p, theta, rng);
  for (auto& yi : y) yi = std::exp(-yi);
  return y;
}

std::vector<double> sample_gumbel_core(std::size_t p, double theta, double alpha_tail,
                                       RngStream& rng) {
  require(alpha_tail > 0.0, "sample_gumbel_core: tail index must be positive");
  auto y = gumbel_neglog_uniforms(p, theta, rng);
  // Computed from -log U directly; exp then log would lose the small values.
  for (auto& yi : y) yi = std::pow(yi, -1.0 / alpha_tail);
  return y;
}

void rotate_in_plane(std::span<double> x, std::size_t axis_a, std::size_t axis_b, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const double xa = x[axis_a];
  const double xb = x[axis_b];
  x[axis_a] = c * xa - s * xb;
  x[axis_b] = s * xa + c * xb;
}

ModelSampler::ModelSampler(SyntheticModel model) : model_(std::move(model)) {
  model_.validate();
  const std::size_t d = model_.d;
  const SymMatrix cov = noise_covariance();
  chol_ = Matrix(d, d);
  for (std::size_t j = 0; j < d; ++j) {
    double diag = cov(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= chol_(j, k) * chol_(j, k);
    require(diag > 0.0, "model: noise covariance is not positive definite");
    chol_(j, j) = std::sqrt(diag);
    for (std::size_t i = j + 1; i < d; ++i) {
      double v = cov(i, j);
      for (std::size_t k = 0; k < j; ++k) v -= chol_(i, k) * chol_(j, k);
      chol_(i, j) = v / chol_(j, j);
    }
  }
}

SymMatrix ModelSampler::noise_covariance() const {
  const std::size_t d = model_.d;
  SymMatrix cov(d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      cov.set(i, j, model_.noise_variance * (i == j ? 1.0 : model_.noise_correlation));
    }
  }
  return cov;
}

void ModelSampler::draw_core(RngStream& rng, std::span<double> out, double radial_floor) const {
  require(out.size() == model_.d, "ModelSampler: output has wrong length");
  std::fill(out.begin(), out.end(), 0.0);
  const std::size_t p = model_.p;
  switch (model_.kind) {
    case SyntheticModel::Kind::dirichlet:
    case SyntheticModel::Kind::dirichlet_rotated: {
      const auto core = sample_dirichlet_core(p, model_.dirichlet_params, model_.alpha_tail, rng,
                                              radial_floor);
      std::copy(core.begin(), core.end(), out.begin());
      if (model_.kind == SyntheticModel::Kind::dirichlet_rotated) {
        const std::size_t a = rng.index(p);
        const std::size_t b = p + rng.index(model_.d - p);
        const double angle = model_.rotation_max_angle * (2.0 * rng.uniform() - 1.0);
        rotate_in_plane(out, a, b, angle);
      }
      break;
    }
    case SyntheticModel::Kind::gumbel: {
      require(radial_floor == 1.0, "ModelSampler: radial floor needs a Dirichlet model");
      const auto core = sample_gumbel_core(p, model_.gumbel_theta, model_.alpha_tail, rng);
      std::copy(core.begin(), core.end(), out.begin());
      break;
    }
  }
}

void ModelSampler::draw_noise_premodulus(RngStream& rng, std::span<double> out) const {
  const std::size_t d = model_.d;
  require(out.size() == d, "ModelSampler: output has wrong length");
  thread_local std::vector<double> z;
  z.resize(d);
  for (auto& zi : z) zi = rng.normal();
  for (std::size_t i = 0; i < d; ++i) {
    double v = 0.0;
    for (std::size_t k = 0; k <= i; ++k) v += chol_(i, k) * z[k];
    out[i] = v;
  }
}

void ModelSampler::draw(RngStream& rng, std::span<double> out, double radial_floor) const {
  draw_core(rng, out, radial_floor);
  thread_local std::vector<double> noise;
  noise.resize(model_.d);
  draw_noise_premodulus(rng, noise);
  for (std::size_t i = 0; i < model_.d; ++i) out[i] += std::abs(noise[i]);
}

Sample sample_model(const SyntheticModel& m, std::size_t n, RngStream& rng) {
  require(n >= 1, "sample_model: need n >= 1");
  const ModelSampler sampler(m);
  std::vector<double> data(n * m.d);
  for (std::size_t i = 0; i < n; ++i) {
    sampler.draw(rng, std::span<double>(data.data() + i * m.d, m.d));
  }
  return Sample(n, m.d, std::move(data));
}

const char* to_string(OracleOptions::Mode mode) noexcept {
  switch (mode) {
    case OracleOptions::Mode::automatic:
      return "automatic";
    case OracleOptions::Mode::direct:
      return "direct";
    case OracleOptions::Mode::radial_tail:
      return "radial-tail";
  }
  return "?";
}

namespace {

// Statistic whose exceedance of u defines the conditioning event.
struct Conditioning {
  enum class Stat { norm, max_all, max_first };
  Stat stat = Stat::norm;
  std::size_t p = 0;

  bool operator==(const Conditioning&) const = default;

  double operator()(std::span<const double> x) const {
    switch (stat) {
      case Stat::norm:
        return norm2(x);
      case Stat::max_all:
        return *std::max_element(x.begin(), x.end());
      case Stat::max_first:
        return *std::max_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(p));
    }
    return 0.0;
  }
};

Conditioning conditioning_for(const TailFunctional& f) {
  if (f.kind != TailFunctional::Kind::conditional_single) return {};
  if (f.max_scope == TailFunctional::MaxScope::all) return {Conditioning::Stat::max_all, 0};
  return {Conditioning::Stat::max_first, f.p_split};
}

bool event_holds(const TailFunctional& f, std::span<const double> x, double norm, double u) {
  const std::size_t p = f.p_split;
  switch (f.kind) {
    case TailFunctional::Kind::mean_contribution: {
      double s = 0.0;
      for (std::size_t j = 0; j < p; ++j) s += x[j];
      return s / static_cast<double>(p) / norm > f.t_i;
    }
    case TailFunctional::Kind::joint_exceedance: {
      for (std::size_t j = 0; j < p; ++j)
        if (!(x[j] > u)) return false;
      for (std::size_t j = p; j < x.size(); ++j)
        if (x[j] > u) return false;
      return true;
    }
    case TailFunctional::Kind::conditional_single:
      return x[0] > u;
    case TailFunctional::Kind::min_contribution:
      return *std::min_element(x.begin(), x.end()) > u;
  }
  return false;
}

std::size_t shard_size(std::size_t total, std::size_t shards, std::size_t s) {
  return total / shards + (s < total % shards ? 1 : 0);
}

}  // namespace

std::vector<OracleResult> mc_oracle(const SyntheticModel& m, std::span<const TailFunctional> fs,
                                    const OracleOptions& opts, std::uint64_t seed) {
  require(!fs.empty(), "mc_oracle: no functionals requested");
  require(opts.n_mc >= 100'000, "mc_oracle: need n_mc >= 1e5");
  require(opts.shards >= 1, "mc_oracle: need at least one shard");
  for (const auto& f : fs) f.validate(m.d);
  const ModelSampler sampler(m);
  const std::size_t d = m.d;
  const bool dirichlet_kind = m.kind != SyntheticModel::Kind::gumbel;

  auto mode = opts.mode;
  if (mode == OracleOptions::Mode::automatic) {
    mode = dirichlet_kind ? OracleOptions::Mode::radial_tail : OracleOptions::Mode::direct;
  }
  require(mode == OracleOptions::Mode::direct || dirichlet_kind,
          "mc_oracle: radial-tail sampling needs a Dirichlet model");

  std::vector<Conditioning> conds;
  std::vector<std::size_t> cond_of(fs.size());
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const auto c = conditioning_for(fs[i]);
    auto it = std::find(conds.begin(), conds.end(), c);
    if (it == conds.end()) it = conds.insert(conds.end(), c);
    cond_of[i] = static_cast<std::size_t>(it - conds.begin());
  }

  // Radius floor r0 and level u = r0 + margin: a row with ||X|| > u (hence
  // any coordinate > u) must have R > r0 unless ||noise|| exceeds the
  // margin of 50 noise standard deviations, which never happens in practice.
  double radial_floor = 1.0;
  std::vector<double> levels(conds.size(), opts.u.value_or(0.0));
  if (mode == OracleOptions::Mode::radial_tail) {
    const double margin = 50.0 * std::sqrt(static_cast<double>(d) * m.noise_variance);
    const double u = opts.u.value_or(1e4 * margin + margin);
    radial_floor = std::max(1.0, u - margin);
    std::fill(levels.begin(), levels.end(), u);
  } else if (!opts.u) {
    // Pilot pass: u is the (target + 1)-th largest conditioning statistic.
    const std::size_t keep = opts.target_events + 1;
    require(keep <= opts.n_mc, "mc_oracle: target_events must be below n_mc");
    using MinHeap = std::priority_queue<double, std::vector<double>, std::greater<>>;
    std::vector<std::vector<std::vector<double>>> tops(opts.shards);
    parallel_for(opts.shards, opts.threads, [&](std::size_t s) {
      RngStream rng(seed, kOracleStreamBase + s);
      std::vector<MinHeap> heaps(conds.size());
      std::vector<double> x(d);
      for (std::size_t r = 0, rows = shard_size(opts.n_mc, opts.shards, s); r < rows; ++r) {
        sampler.draw(rng, x);
        for (std::size_t c = 0; c < conds.size(); ++c) {
          const double v = conds[c](x);
          if (heaps[c].size() < keep) {
            heaps[c].push(v);
          } else if (v > heaps[c].top()) {
            heaps[c].pop();
            heaps[c].push(v);
          }
        }
      }
      tops[s].resize(conds.size());
      for (std::size_t c = 0; c < conds.size(); ++c) {
        while (!heaps[c].empty()) {
          tops[s][c].push_back(heaps[c].top());
          heaps[c].pop();
        }
      }
    });
    for (std::size_t c = 0; c < conds.size(); ++c) {
      std::vector<double> all;
      for (const auto& t : tops) all.insert(all.end(), t[c].begin(), t[c].end());
      std::nth_element(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep - 1), all.end(),
                       std::greater<>());
      levels[c] = all[keep - 1];
    }
  }

  struct Counts {
    std::vector<std::size_t> events;
    std::vector<std::size_t> hits;
  };
  std::vector<Counts> per_shard(opts.shards);
  parallel_for(opts.shards, opts.threads, [&](std::size_t s) {
    RngStream rng(seed, kOracleStreamBase + s);
    Counts counts{std::vector<std::size_t>(fs.size(), 0), std::vector<std::size_t>(fs.size(), 0)};
    std::vector<double> x(d);
    std::vector<double> stat(conds.size());
    for (std::size_t r = 0, rows = shard_size(opts.n_mc, opts.shards, s); r < rows; ++r) {
      sampler.draw(rng, x, radial_floor);
      for (std::size_t c = 0; c < conds.size(); ++c) stat[c] = conds[c](x);
      const double nrm = norm2(x);
      for (std::size_t i = 0; i < fs.size(); ++i) {
        const double u = levels[cond_of[i]];
        if (!(stat[cond_of[i]] > u)) continue;
        ++counts.events[i];
        if (event_holds(fs[i], x, nrm, u)) ++counts.hits[i];
      }
    }
    per_shard[s] = std::move(counts);
  });

  std::vector<OracleResult> out(fs.size());
  for (std::size_t i = 0; i < fs.size(); ++i) {
    OracleResult& r = out[i];
    for (const auto& c : per_shard) {
      r.events += c.events[i];
      r.hits += c.hits[i];
    }
    if (r.events < 100) {
      fail(ErrorCode::insufficient_exceedances,
           "mc_oracle: only " + std::to_string(r.events) +
               " conditioning events observed (need at least 100); lower u or raise n_mc");
    }
    r.u = levels[cond_of[i]];
    r.n_mc = opts.n_mc;
    r.mode = mode;
    r.estimate = static_cast<double>(r.hits) / static_cast<double>(r.events);
    r.std_error = std::sqrt(r.estimate * (1.0 - r.estimate) / static_cast<double>(r.events));
  }
  return out;
}

OracleResult mc_oracle(const SyntheticModel& m, const TailFunctional& f, const OracleOptions& opts,
                       std::uint64_t seed) {
  return mc_oracle(m, std::span<const TailFunctional>(&f, 1), opts, seed)[0];
}

}  // namespace xpca
