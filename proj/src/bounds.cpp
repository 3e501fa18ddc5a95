#include "xpca/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "xpca/error.hpp"

namespace xpca {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log4_over(double delta) {
  require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
  return std::log(4.0 / delta);
}

}  // namespace

BoundStatistics s_statistic(const AngularCloud& c, std::size_t p) {
  require(c.k >= 1, "s_statistic: empty cloud");
  require(p >= 1 && p <= c.d, "s_statistic: need 1 <= p <= d");

  double fourth = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double sq = dot(c.theta(i), c.theta(i));
    require(sq <= 1.0 + 1e-12,
            "s_statistic: rescaled points must lie in the unit ball (use a bounded scaling)");
    fourth += sq * sq;
  }
  const double ell = static_cast<double>(c.k);
  const double hs = hs_norm(second_moment(c));
  const double s = fourth / ell - hs * hs;

  BoundStatistics b;
  b.s_tilde = std::max(0.0, s);
  b.ell = c.k;
  b.p = p;
  b.d = c.d;
  b.k = c.k;
  b.n = c.n;
  return b;
}

double uniform_bound(const BoundStatistics& b, double delta) {
  const double l4 = log4_over(delta);
  require(b.k >= 1, "uniform_bound: need k >= 1");
  require(b.n >= b.k, "uniform_bound: need n >= k");
  const double k = static_cast<double>(b.k);
  const double frac = k / static_cast<double>(b.n);
  const double c = static_cast<double>(b.complexity());
  return std::sqrt(c * b.s_tilde / k) + std::sqrt(8.0 * (1.0 + frac) * l4 / k) + 4.0 * l4 / (3.0 * k);
}

double excess_risk_bound(const BoundStatistics& b, double delta) {
  return 2.0 * uniform_bound(b, delta);
}

bool ConfidenceBand::bounded() const noexcept { return std::isfinite(half_width); }

bool Interval::bounded() const noexcept { return std::isfinite(upper); }

ConfidenceBand band_for_split(const BoundStatistics& b, double level, double split) {
  require(level > 0.0 && level < 1.0, "confidence level must lie in (0, 1)");
  require(split > 0.0 && split <= 1.0, "band_for_split: split must lie in (0, 1]");

  ConfidenceBand band;
  band.level = level;
  band.ell = b.ell;
  band.split = split;
  if (b.ell < 2) {
    band.half_width = kInf;
    band.u = kInf;
    band.v = kInf;
    return band;
  }

  const double ell = static_cast<double>(b.ell);
  const double half_ell = static_cast<double>(b.ell / 2);
  const double miss = 1.0 - level;
  const double c = static_cast<double>(b.complexity());

  band.u = std::sqrt(std::log(2.0 / (split * miss)) / (2.0 * ell));
  band.v = split < 1.0 ? std::sqrt(2.0 * std::log(1.0 / ((1.0 - split) * miss)) / half_ell) : kInf;

  const double spread = std::sqrt(c * b.s_tilde / (ell - 1.0));
  const double budget = c == 0.0 ? 0.0 : std::sqrt(c * band.v / ell);
  band.half_width = spread + budget + band.u;
  return band;
}

ConfidenceBand calibrate_band(const BoundStatistics& b, double level) {
  require(level > 0.0 && level < 1.0, "confidence level must lie in (0, 1)");
  if (b.ell < 2 || b.complexity() == 0) return band_for_split(b, level, 1.0);

  auto width = [&](double g) { return band_for_split(b, level, g).half_width; };

  // Coarse scan guards against multiple local minima.
  constexpr int kGrid = 10000;
  const double step = 1.0 / (kGrid + 1);
  int best = 1;
  double best_w = width(step);
  for (int i = 2; i <= kGrid; ++i) {
    const double w = width(i * step);
    if (w < best_w) {
      best_w = w;
      best = i;
    }
  }

  double lo = (best - 1) * step;
  double hi = std::min((best + 1) * step, 1.0 - 1e-15);
  if (lo <= 0.0) lo = step * 1e-6;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = width(x1);
  double f2 = width(x2);
  while (hi - lo > 1e-10) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = width(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = width(x2);
    }
  }
  const double g = 0.5 * (lo + hi);
  ConfidenceBand out = band_for_split(b, level, g);
  if (best_w < out.half_width) out = band_for_split(b, level, best * step);
  return out;
}

double band_constraint_residual(const ConfidenceBand& band) {
  const double ell = static_cast<double>(band.ell);
  const double half_ell = static_cast<double>(band.ell / 2);
  const double u_term = 2.0 * std::exp(-2.0 * ell * band.u * band.u);
  const double v_term = std::isfinite(band.v) ? std::exp(-half_ell * band.v * band.v / 2.0) : 0.0;
  return u_term + v_term - (1.0 - band.level);
}

BandReport confidence_band(const AngularCloud& c, const Subspace& v, double level) {
  BandReport r;
  r.stats = s_statistic(c, v.p());
  r.empirical_risk = empirical_risk(c, v);
  r.band = calibrate_band(r.stats, level);
  if (!r.band.bounded()) {
    r.interval = {0.0, kInf};
  } else {
    r.interval = {std::max(0.0, r.empirical_risk - r.band.half_width),
                  r.empirical_risk + r.band.half_width};
  }
  return r;
}

}  // namespace xpca
