#include "xpca/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "xpca/error.hpp"
#include "xpca/parallel.hpp"

namespace xpca {

const char* to_string(Estimator e) noexcept {
  switch (e) {
    case Estimator::standard:
      return "standard";
    case Estimator::pca:
      return "pca";
    case Estimator::pca_small:
      return "pca-small";
  }
  return "?";
}

Estimator parse_estimator(const std::string& name) {
  if (name == "standard") return Estimator::standard;
  if (name == "pca") return Estimator::pca;
  if (name == "pca-small") return Estimator::pca_small;
  fail(ErrorCode::invalid_input,
       "unknown estimator '" + name + "' (expected standard, pca or pca-small)");
}

void ExperimentConfig::validate() const {
  model.validate();
  require(replications >= 1, "experiment: need at least one replication");
  require(!k_grid.empty(), "experiment: empty k grid");
  require(std::is_sorted(k_grid.begin(), k_grid.end()) &&
              std::adjacent_find(k_grid.begin(), k_grid.end()) == k_grid.end(),
          "experiment: k grid must be strictly increasing");
  require(k_grid.front() >= 1 && k_grid.back() < n, "experiment: k grid must lie in [1, n)");
  require(p_tilde_max >= 1, "experiment: need p_tilde_max >= 1");
  require(pca_dim() >= 1 && pca_dim() <= model.d, "experiment: estimator dimension out of range");
  require(k_fit_small >= 1 && k_fit_small < n, "experiment: k_fit_small must lie in [1, n)");
  require(!estimators.empty(), "experiment: no estimators selected");
  for (const auto& f : functionals) f.validate(model.d);
  if (truths) {
    require(truths->size() == functionals.size(), "experiment: need one truth per functional");
  }
}

std::vector<TailFunctional> standard_functionals(const SyntheticModel& m, double t_i) {
  using K = TailFunctional::Kind;
  std::vector<TailFunctional> fs;
  for (K kind : {K::mean_contribution, K::joint_exceedance, K::conditional_single,
                 K::min_contribution}) {
    TailFunctional f;
    f.kind = kind;
    f.alpha = m.alpha_tail;
    f.p_split = m.p;
    f.t_i = t_i;
    fs.push_back(f);
  }
  return fs;
}

ReplicationResult run_replication(const ExperimentConfig& cfg, std::size_t r) {
  const auto& m = cfg.model;
  const std::size_t d = m.d;
  const std::size_t p_tilde_max = std::min(cfg.p_tilde_max, d);
  const std::size_t pca_p = cfg.pca_dim();
  const ProjectionOptions proj{cfg.project_complement};

  RngStream rng(cfg.base_seed, r);
  const Sample sample = sample_model(m, cfg.n, rng);
  const auto order = rank_by_norm(sample);
  const auto scaling = ScalingFunction::inverse_norm();
  const Subspace truth_space = Subspace::coordinate(d, m.p);

  std::optional<Subspace> small_fit;
  const bool want_small = std::find(cfg.estimators.begin(), cfg.estimators.end(),
                                    Estimator::pca_small) != cfg.estimators.end();
  if (want_small) {
    const auto cloud = select_exceedances(sample, order, cfg.k_fit_small, scaling);
    small_fit = fit_subspace(second_moment(cloud), pca_p).subspace;
  }

  ReplicationResult out;
  out.risk.resize(cfg.k_grid.size());
  out.rho.resize(cfg.k_grid.size());
  out.values.resize(cfg.k_grid.size());

  // Running sum of theta theta^T over rows in decreasing norm order; the
  // snapshot at k equals second_moment(select_exceedances(sample, k)).
  SymMatrix running(d);
  std::size_t added = 0;
  for (std::size_t ki = 0; ki < cfg.k_grid.size(); ++ki) {
    const std::size_t k = cfg.k_grid[ki];
    for (; added < k; ++added) {
      const std::size_t i = order[added];
      const double omega = scaling.weight(sample.row(i), sample.norm(i));
      std::vector<double> theta(sample.row(i).begin(), sample.row(i).end());
      for (double& v : theta) v *= omega;
      running.add_outer(theta);
    }
    SymMatrix sigma = running;
    sigma *= 1.0 / static_cast<double>(k);
    const auto eig = sym_eig(sigma);
    const auto tails = tail_sums(eig.values);
    out.risk[ki].assign(tails.begin() + 1, tails.begin() + 1 + static_cast<std::ptrdiff_t>(p_tilde_max));
    out.rho[ki] = subspace_distance(fit_subspace(eig, m.p).subspace, truth_space);

    const Subspace k_fit = fit_subspace(eig, pca_p).subspace;
    out.values[ki].resize(cfg.estimators.size());
    for (std::size_t e = 0; e < cfg.estimators.size(); ++e) {
      SpectralMeasureEstimate h;
      switch (cfg.estimators[e]) {
        case Estimator::standard:
          h = spectral_standard(sample, order, k);
          break;
        case Estimator::pca:
          h = spectral_project(sample, order, k, k_fit, proj);
          break;
        case Estimator::pca_small:
          h = spectral_project(sample, order, k, *small_fit, proj);
          break;
      }
      auto& vals = out.values[ki][e];
      vals.resize(cfg.functionals.size());
      for (std::size_t f = 0; f < cfg.functionals.size(); ++f) {
        try {
          vals[f] = evaluate_functional(h, cfg.functionals[f]);
        } catch (const Error& err) {
          if (err.code() != ErrorCode::undefined_result) throw;
          vals[f] = std::numeric_limits<double>::quiet_NaN();
        }
      }
    }
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::size_t p_tilde_max = std::min(cfg.p_tilde_max, cfg.model.d);
  const std::size_t nk = cfg.k_grid.size();

  ExperimentResult res;
  res.k_grid = cfg.k_grid;
  res.p_tilde_max = p_tilde_max;
  res.replications = cfg.replications;

  if (cfg.truths) {
    for (double t : *cfg.truths) {
      OracleResult o;
      o.estimate = t;
      res.truth.push_back(o);
    }
  } else if (!cfg.functionals.empty()) {
    res.truth = mc_oracle(cfg.model, cfg.functionals, cfg.oracle, cfg.base_seed);
  }

  std::vector<ReplicationResult> reps(cfg.replications);
  parallel_for(cfg.replications, cfg.threads,
               [&](std::size_t r) { reps[r] = run_replication(cfg, r); });

  std::vector<double> column(cfg.replications);
  res.mean_risk.assign(nk, std::vector<double>(p_tilde_max));
  res.mean_rho.assign(nk, 0.0);
  for (std::size_t ki = 0; ki < nk; ++ki) {
    for (std::size_t p = 0; p < p_tilde_max; ++p) {
      for (std::size_t r = 0; r < cfg.replications; ++r) column[r] = reps[r].risk[ki][p];
      res.mean_risk[ki][p] =
          pairwise_sum(column.begin(), column.end()) / static_cast<double>(cfg.replications);
    }
    for (std::size_t r = 0; r < cfg.replications; ++r) column[r] = reps[r].rho[ki];
    res.mean_rho[ki] =
        pairwise_sum(column.begin(), column.end()) / static_cast<double>(cfg.replications);
  }
  res.single_risk = reps.front().risk;

  for (std::size_t ki = 0; ki < nk; ++ki) {
    for (std::size_t e = 0; e < cfg.estimators.size(); ++e) {
      for (std::size_t f = 0; f < cfg.functionals.size(); ++f) {
        std::vector<double> vals;
        for (const auto& rep : reps) {
          const double v = rep.values[ki][e][f];
          if (!std::isnan(v)) vals.push_back(v);
        }
        RmseCell cell;
        cell.k = cfg.k_grid[ki];
        cell.estimator = cfg.estimators[e];
        cell.functional = f;
        cell.used = vals.size();
        cell.excluded = cfg.replications - vals.size();
        if (!vals.empty()) {
          cell.rmse = rmse(vals, res.truth[f].estimate);
          cell.mean = pairwise_sum(vals.begin(), vals.end()) / static_cast<double>(vals.size());
        } else {
          cell.rmse = std::numeric_limits<double>::quiet_NaN();
          cell.mean = std::numeric_limits<double>::quiet_NaN();
        }
        res.rmse.push_back(cell);
      }
    }
  }
  return res;
}

std::vector<ReferenceLimit> reference_limits(const SyntheticModel& m) {
  using K = TailFunctional::Kind;
  if (m.d != 10 || m.p != 2) return {};
  if (m.kind == SyntheticModel::Kind::dirichlet && m.alpha_tail == 1.0 &&
      m.dirichlet_params == std::vector<double>{3.0, 3.0}) {
    return {{K::mean_contribution, 0.65, 0.684},
            {K::joint_exceedance, 0.0, 0.309},
            {K::conditional_single, 0.0, 0.770},
            {K::min_contribution, 0.0, 0.0}};
  }
  if (m.kind == SyntheticModel::Kind::gumbel && m.alpha_tail == 2.0 && m.gumbel_theta == 2.0) {
    return {{K::mean_contribution, 0.7, 0.3813},
            {K::joint_exceedance, 0.0, 0.083},
            {K::conditional_single, 0.0, 1.0 / std::sqrt(2.0)},
            {K::min_contribution, 0.0, 0.0}};
  }
  return {};
}

double rmse(std::span<const double> values, double truth) {
  require(!values.empty(), "rmse: empty input");
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double e = values[i] - truth;
    sq[i] = e * e;
  }
  return std::sqrt(pairwise_sum(sq.begin(), sq.end()) / static_cast<double>(values.size()));
}

}  // namespace xpca
