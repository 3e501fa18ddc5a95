#include "xpca/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "xpca/error.hpp"

namespace xpca {

double SpectralMeasureEstimate::total_mass() const {
  double m = 0.0;
  for (double w : weights) m += w;
  return m;
}

SpectralMeasureEstimate spectral_standard(const Sample& s, std::size_t k) {
  const auto order = rank_by_norm(s);
  return spectral_standard(s, order, k);
}

SpectralMeasureEstimate spectral_standard(const Sample& s, std::span<const std::size_t> order,
                                          std::size_t k) {
  require(k >= 1 && k < s.n(), "spectral_standard: need 1 <= k < n");
  SpectralMeasureEstimate h;
  h.d = s.d();
  h.k = k;
  const double mass = 1.0 / static_cast<double>(k);
  for (std::size_t r = 0; r < k; ++r) {
    const std::size_t i = order[r];
    const double nrm = s.norm(i);
    require(nrm > 0.0, "spectral_standard: fewer than k non-zero observations");
    for (double v : s.row(i)) h.atoms.push_back(v / nrm);
    h.weights.push_back(mass);
  }
  return h;
}

SpectralMeasureEstimate spectral_project(const Sample& s, std::span<const std::size_t> order,
                                         std::size_t k, const Subspace& v,
                                         ProjectionOptions opts) {
  require(k >= 1 && k < s.n(), "spectral_project: need 1 <= k < n");
  require(v.ambient_dim() == s.d(), "spectral_project: dimension mismatch");

  SpectralMeasureEstimate h;
  h.d = s.d();
  h.k = k;
  h.subspace = v;
  const double threshold = s.norm(order[k]);
  const double mass = 1.0 / static_cast<double>(k);
  const bool identity = v.p() == s.d() && !opts.project_complement;

  std::vector<double> y(s.d());
  for (std::size_t r = 0; r < k; ++r) {
    const auto x = s.row(order[r]);
    if (identity) {
      std::copy(x.begin(), x.end(), y.begin());
    } else {
      const auto px = v.project(x);
      for (std::size_t j = 0; j < y.size(); ++j) y[j] = opts.project_complement ? x[j] - px[j] : px[j];
    }
    const double nrm = norm2(y);
    if (!(nrm > threshold)) continue;
    for (double c : y) h.atoms.push_back(c / nrm);
    h.weights.push_back(mass);
  }
  return h;
}

SpectralMeasureEstimate spectral_pca(const Sample& s, std::size_t k, std::size_t k_fit,
                                     std::size_t p, ProjectionOptions opts) {
  require(k >= 1 && k < s.n(), "spectral_pca: need 1 <= k < n");
  require(k_fit >= 1 && k_fit < s.n(), "spectral_pca: need 1 <= k_fit < n");
  require(p >= 1 && p <= s.d(), "spectral_pca: need 1 <= p <= d");

  const auto order = rank_by_norm(s);
  const auto cloud = select_exceedances(s, order, k_fit, ScalingFunction::inverse_norm());
  const auto fit = fit_subspace(second_moment(cloud), p);
  auto h = spectral_project(s, order, k, fit.subspace, opts);
  h.k_fit = k_fit;
  return h;
}

void TailFunctional::validate(std::size_t d) const {
  require(alpha > 0.0, "tail functional: alpha must be positive");
  switch (kind) {
    case Kind::mean_contribution:
      require(p_split >= 1 && p_split <= d, "functional (i): need 1 <= p <= d");
      require(t_i > 0.0 && t_i < 1.0 / std::sqrt(static_cast<double>(p_split)),
              "functional (i): threshold must lie in (0, p^{-1/2})");
      break;
    case Kind::joint_exceedance:
    case Kind::conditional_single:
      require(p_split >= 1 && p_split < d, "functionals (ii)/(iii): need 1 <= p < d");
      break;
    case Kind::min_contribution:
      break;
  }
}

namespace {

double pos_pow(double x, double alpha) { return x > 0.0 ? std::pow(x, alpha) : 0.0; }

}  // namespace

double evaluate_functional(const SpectralMeasureEstimate& h, const TailFunctional& f) {
  f.validate(h.d);
  const std::size_t p = f.p_split;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t a = 0; a < h.size(); ++a) {
    const auto x = h.atom(a);
    const double w = h.weights[a];
    switch (f.kind) {
      case TailFunctional::Kind::mean_contribution: {
        double mean = 0.0;
        for (std::size_t j = 0; j < p; ++j) mean += x[j];
        if (mean / static_cast<double>(p) > f.t_i) num += w;
        break;
      }
      case TailFunctional::Kind::joint_exceedance: {
        double lo = x[0];
        for (std::size_t j = 1; j < p; ++j) lo = std::min(lo, x[j]);
        double hi = 0.0;
        for (std::size_t j = p; j < h.d; ++j) hi = std::max(hi, x[j]);
        num += w * std::max(0.0, pos_pow(lo, f.alpha) - pos_pow(hi, f.alpha));
        break;
      }
      case TailFunctional::Kind::conditional_single: {
        const std::size_t end = f.max_scope == TailFunctional::MaxScope::all ? h.d : p;
        double hi = 0.0;
        for (std::size_t j = 0; j < end; ++j) hi = std::max(hi, x[j]);
        num += w * pos_pow(x[0], f.alpha);
        den += w * pos_pow(hi, f.alpha);
        break;
      }
      case TailFunctional::Kind::min_contribution: {
        double lo = x[0];
        for (std::size_t j = 1; j < h.d; ++j) lo = std::min(lo, x[j]);
        num += w * pos_pow(lo, f.alpha);
        break;
      }
    }
  }
  if (f.kind != TailFunctional::Kind::conditional_single) return num;
  if (!(den > 0.0)) {
    fail(ErrorCode::undefined_result, "functional (iii): no atom has a positive coordinate");
  }
  return num / den;
}

const char* to_string(TailFunctional::Kind kind) noexcept {
  switch (kind) {
    case TailFunctional::Kind::mean_contribution:
      return "i";
    case TailFunctional::Kind::joint_exceedance:
      return "ii";
    case TailFunctional::Kind::conditional_single:
      return "iii";
    case TailFunctional::Kind::min_contribution:
      return "iv";
  }
  return "?";
}

TailFunctional::Kind parse_functional_kind(const std::string& name) {
  if (name == "i" || name == "mean-contribution") return TailFunctional::Kind::mean_contribution;
  if (name == "ii" || name == "joint-exceedance") return TailFunctional::Kind::joint_exceedance;
  if (name == "iii" || name == "conditional-single") return TailFunctional::Kind::conditional_single;
  if (name == "iv" || name == "min-contribution") return TailFunctional::Kind::min_contribution;
  fail(ErrorCode::invalid_input, "unknown functional '" + name + "' (expected i, ii, iii or iv)");
}

}  // namespace xpca
