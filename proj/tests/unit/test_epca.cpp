#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "helpers.hpp"
#include "xpca/epca.hpp"
#include "xpca/error.hpp"

using namespace xpca;
using namespace xpca::test;

namespace {

Sample rows_with_norms(const std::vector<double>& norms) {
  std::vector<std::vector<double>> rows;
  for (double r : norms) rows.push_back({0.6 * r, 0.8 * r});
  return Sample::from_rows(rows);
}

Sample transform_rows(const Sample& s, const Matrix& q) {
  std::vector<double> data(s.n() * s.d());
  for (std::size_t i = 0; i < s.n(); ++i)
    for (std::size_t a = 0; a < s.d(); ++a) {
      double v = 0.0;
      for (std::size_t b = 0; b < s.d(); ++b) v += q(a, b) * s.row(i)[b];
      data[i * s.d() + a] = v;
    }
  return Sample(s.n(), s.d(), data);
}

Subspace transform_subspace(const Subspace& v, const Matrix& q) {
  std::vector<std::vector<double>> basis;
  for (const auto& b : v.basis()) {
    std::vector<double> qb(b.size(), 0.0);
    for (std::size_t a = 0; a < b.size(); ++a)
      for (std::size_t c = 0; c < b.size(); ++c) qb[a] += q(a, c) * b[c];
    basis.push_back(qb);
  }
  return Subspace::span_of(v.ambient_dim(), basis);
}

Sample anisotropic_sample(std::mt19937_64& gen, std::size_t n, std::size_t d) {
  std::student_t_distribution<double> t(2.0);
  std::vector<double> data(n * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) data[i * d + j] = t(gen) / static_cast<double>(j + 1);
  return Sample(n, d, data);
}

}  // namespace

TEST_SUITE("epca") {
  TEST_CASE("rescale examples") {
    const std::vector<double> x{3, 4, 0};
    const auto t = rescale(x, ScalingFunction::inverse_norm());
    CHECK(t[0] == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(t[1] == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(t[2] == 0.0);

    const std::vector<double> y{2, 0};
    const auto u = rescale(y, ScalingFunction::power_norm(0.5));
    CHECK(u[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(u[1] == 0.0);

    CHECK_THROWS_AS(rescale(std::vector<double>{0, 0}, ScalingFunction::inverse_norm()), Error);
  }

  TEST_CASE("rescale homogeneity") {
    std::mt19937_64 gen(21);
    std::normal_distribution<double> z;
    for (double beta : {1.0, 0.5, 0.25, 0.75}) {
      std::vector<double> x(5);
      for (auto& v : x) v = z(gen);
      std::vector<double> lx = x;
      for (auto& v : lx) v *= 7.0;
      const auto w = ScalingFunction::power_norm(beta);
      const auto a = rescale(lx, w);
      const auto b = rescale(x, w);
      for (std::size_t j = 0; j < 5; ++j)
        CHECK(a[j] == doctest::Approx(std::pow(7.0, 1.0 - beta) * b[j]).epsilon(1e-13));
    }
  }

  TEST_CASE("positive orthant scaling") {
    const auto w = ScalingFunction::positive_orthant_power(1.0);
    CHECK(w.weight(std::vector<double>{1.0, -0.1}) == 0.0);
    CHECK(w.weight(std::vector<double>{3.0, 4.0}) == doctest::Approx(0.2));
    const auto s = Sample::from_rows({{10, 0}, {-9, 1}, {8, 1}, {1, 1}});
    const auto c = select_exceedances(s, 3, w);
    CHECK(c.k == 3);
    CHECK(c.dropped == 1);
    CHECK(c.size() == 2);
    // Normalisation still uses k.
    const auto sigma = second_moment(c);
    CHECK(sigma.trace() == doctest::Approx(2.0 / 3.0));
  }

  TEST_CASE("select_exceedances examples") {
    const auto s = rows_with_norms({4, 10, 2, 8, 6});
    const auto c = select_exceedances(s, 2, ScalingFunction::inverse_norm());
    CHECK(c.threshold == doctest::Approx(6.0));
    CHECK(c.k == 2);
    REQUIRE(c.size() == 2);
    CHECK(c.indices[0] == 1);
    CHECK(c.indices[1] == 3);
    CHECK(c.threshold_ties == 0);

    const auto all = select_exceedances(s, 4, ScalingFunction::inverse_norm());
    CHECK(all.threshold == doctest::Approx(2.0));
    CHECK(all.size() == 4);

    CHECK_THROWS_AS(select_exceedances(s, 5, ScalingFunction::inverse_norm()), Error);
    CHECK_THROWS_AS(select_exceedances(s, 0, ScalingFunction::inverse_norm()), Error);
  }

  TEST_CASE("ties at the threshold are broken by row index") {
    const auto s = rows_with_norms({5, 3, 3, 3, 1});
    const auto c = select_exceedances(s, 2, ScalingFunction::inverse_norm());
    CHECK(c.size() == 2);
    CHECK(c.indices[0] == 0);
    CHECK(c.indices[1] == 1);
    CHECK(c.threshold == doctest::Approx(3.0));
    CHECK(c.threshold_ties == 1);
  }

  TEST_CASE("threshold of a Pareto sample lies in the order-statistic envelope") {
    // Oracle: the 101st largest of 1000 unit Pareto(1) norms, simulated
    // directly 4000 times; the library threshold must lie in its 0.1%-99.9% range.
    std::mt19937_64 oracle_gen(31);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<double> order_stats;
    std::vector<double> r(1000);
    for (int rep = 0; rep < 4000; ++rep) {
      for (auto& v : r) v = 1.0 / (1.0 - u01(oracle_gen));
      std::nth_element(r.begin(), r.begin() + 100, r.end(), std::greater<>());
      order_stats.push_back(r[100]);
    }
    std::sort(order_stats.begin(), order_stats.end());
    const double lo = order_stats[4];
    const double hi = order_stats[3995];
    CHECK(lo < 10.0);
    CHECK(hi > 10.0);

    std::mt19937_64 gen(32);
    for (int rep = 0; rep < 5; ++rep) {
      std::vector<std::vector<double>> rows;
      for (int i = 0; i < 1000; ++i) {
        const double radius = 1.0 / (1.0 - u01(gen));
        const double phi = u01(gen) * std::numbers::pi / 2;
        rows.push_back({radius * std::cos(phi), radius * std::sin(phi)});
      }
      const auto c = select_exceedances(Sample::from_rows(rows), 100,
                                        ScalingFunction::inverse_norm());
      CHECK(c.threshold > lo);
      CHECK(c.threshold < hi);
    }
  }

  TEST_CASE("second_moment examples") {
    const auto a = second_moment(AngularCloud::from_points({{1, 0}, {0, 1}}));
    CHECK(a(0, 0) == 0.5);
    CHECK(a(1, 1) == 0.5);
    CHECK(a(0, 1) == 0.0);
    const auto b = second_moment(AngularCloud::from_points({{1, 0}, {1, 0}, {0, 1}}));
    CHECK(b(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(b(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }

  TEST_CASE("second_moment matches a naive double loop") {
    std::mt19937_64 gen(22);
    const auto c = random_cloud(gen, 6, 40);
    const auto sigma = second_moment(c);
    for (std::size_t a = 0; a < 6; ++a)
      for (std::size_t b = 0; b < 6; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) s += c.theta(i)[a] * c.theta(i)[b];
        CHECK(std::abs(sigma(a, b) - s / 40.0) < 1e-12);
      }
  }

  TEST_CASE("empirical_risk examples") {
    const auto e1 = Subspace::coordinate(2, 1);
    CHECK(empirical_risk(AngularCloud::from_points({{1, 0}, {-1, 0}}), e1) == 0.0);
    CHECK(empirical_risk(AngularCloud::from_points({{0, 1}}), e1) == doctest::Approx(1.0));
    const double r = 1.0 / std::sqrt(2.0);
    const auto c = AngularCloud::from_points({{1, 0}, {r, r}});
    CHECK(empirical_risk(c, e1) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(empirical_risk(second_moment(c), e1) == doctest::Approx(0.25).epsilon(1e-15));
  }

  TEST_CASE("empirical_risk: per-point and trace forms agree") {
    std::mt19937_64 gen(23);
    for (int rep = 0; rep < 50; ++rep) {
      const auto c = random_cloud(gen, 5, 30);
      const auto v = random_subspace(gen, 5, 2);
      CHECK(std::abs(empirical_risk(c, v) - empirical_risk(second_moment(c), v)) < 1e-12);
    }
  }

  TEST_CASE("fit_subspace examples") {
    const auto f = fit_subspace(SymMatrix::diagonal(std::vector<double>{3, 2, 1}), 2);
    CHECK(f.risk == doctest::Approx(1.0));
    CHECK(subspace_distance(f.subspace, Subspace::coordinate(3, 2)) < 1e-14);
    CHECK_FALSE(f.non_unique);

    const auto g = fit_subspace(SymMatrix::from_rows({{2, 1}, {1, 2}}), 1);
    CHECK(g.risk == doctest::Approx(1.0));
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(dot(g.subspace.basis()[0], std::vector<double>{r, r})) ==
          doctest::Approx(1.0));

    const auto h = fit_subspace(SymMatrix::diagonal(std::vector<double>{2, 1, 1}), 2);
    CHECK(h.non_unique);
    CHECK_THROWS_AS(fit_subspace(SymMatrix::identity(3), 0), Error);
    CHECK_THROWS_AS(fit_subspace(SymMatrix::identity(3), 4), Error);
  }

  TEST_CASE("fit_subspace beats random subspaces") {
    std::mt19937_64 gen(24);
    for (int rep = 0; rep < 10; ++rep) {
      const auto c = anisotropic_cloud(gen, 6, 40, 0.6);
      const auto fit = fit_subspace(second_moment(c), 2);
      const double best = empirical_risk(c, fit.subspace);
      CHECK(std::abs(best - fit.risk) < 1e-10);
      for (int t = 0; t < 1000; ++t) CHECK(best <= empirical_risk(c, random_subspace(gen, 6, 2)) + 1e-12);
    }
  }

  TEST_CASE("risk decomposition") {
    std::mt19937_64 gen(25);
    for (int rep = 0; rep < 30; ++rep) {
      const auto c = anisotropic_cloud(gen, 7, 25, 0.7);
      const auto sigma = second_moment(c);
      for (std::size_t p = 1; p <= 7; ++p) {
        const auto fit = fit_subspace(sigma, p);
        double top = 0.0;
        for (std::size_t i = 0; i < p; ++i) top += fit.eigenvalues[i];
        CHECK(std::abs(empirical_risk(c, fit.subspace) + top - sigma.trace()) < 1e-10);
      }
    }
  }

  TEST_CASE("subspace_distance examples") {
    const auto e1 = Subspace::coordinate(2, 1);
    CHECK(subspace_distance(e1, e1) == 0.0);
    const Subspace e2(2, {{0, 1}});
    CHECK(subspace_distance(e1, e2) == doctest::Approx(1.0));

    const double phi = std::numbers::pi / 6;
    const Subspace w(2, {{std::cos(phi), std::sin(phi)}});
    // Oracle: maximise ||(P_V - P_W) x|| over a fine grid of the unit circle.
    double best = 0.0;
    for (int i = 0; i < 200000; ++i) {
      const double a = std::numbers::pi * i / 200000.0;
      const std::vector<double> x{std::cos(a), std::sin(a)};
      const auto pv = e1.project(x);
      const auto pw = w.project(x);
      best = std::max(best, std::hypot(pv[0] - pw[0], pv[1] - pw[1]));
    }
    CHECK(best == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(subspace_distance(e1, w) == doctest::Approx(best).epsilon(1e-9));
    CHECK_THROWS_AS(subspace_distance(e1, Subspace::coordinate(2, 2)), Error);
  }

  TEST_CASE("subspace_distance is a metric on the Grassmannian") {
    std::mt19937_64 gen(26);
    for (int rep = 0; rep < 200; ++rep) {
      const std::size_t d = 3 + static_cast<std::size_t>(rep % 6);
      const std::size_t p = 1 + static_cast<std::size_t>(rep % (d - 1));
      const auto a = random_subspace(gen, d, p);
      const auto b = random_subspace(gen, d, p);
      const auto c = random_subspace(gen, d, p);
      const double ab = subspace_distance(a, b);
      CHECK(ab >= 0.0);
      CHECK(ab <= 1.0);
      CHECK(ab == doctest::Approx(subspace_distance(b, a)).epsilon(1e-12));
      CHECK(ab <= subspace_distance(a, c) + subspace_distance(c, b) + 1e-12);
      CHECK(subspace_distance(a, a) < 1e-7);
    }
  }

  TEST_CASE("hausdorff_bound values") {
    CHECK(hausdorff_bound(0.0) == 0.0);
    CHECK(hausdorff_bound(1.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(hausdorff_bound(0.6) == doctest::Approx(0.6324555320336759).epsilon(1e-15));
    CHECK_THROWS_AS(hausdorff_bound(1.5), Error);
    CHECK_THROWS_AS(hausdorff_bound(-0.1), Error);
  }

  TEST_CASE("Subspace validation") {
    CHECK_THROWS_AS(Subspace(2, {{1, 1}}), Error);
    CHECK_THROWS_AS(Subspace(2, {}), Error);
    CHECK_THROWS_AS(Subspace::span_of(3, {{1, 0, 0}, {2, 0, 0}}), Error);
    const auto s = Subspace::span_of(3, {{1, 1, 0}, {1, 0, 0}});
    CHECK(subspace_distance(s, Subspace::coordinate(3, 2)) < 1e-14);
  }

  TEST_CASE("rotation equivariance of the fit") {
    std::mt19937_64 gen(27);
    for (int rep = 0; rep < 20; ++rep) {
      const auto s = anisotropic_sample(gen, 400, 6);
      const auto q = random_orthogonal(gen, 6);
      const auto w = ScalingFunction::inverse_norm();
      const auto sigma = second_moment(select_exceedances(s, 50, w));
      const auto fit = fit_subspace(sigma, 2);
      if (fit.eigenvalues[1] - fit.eigenvalues[2] <= 1e-6) continue;
      const auto rotated = fit_subspace(second_moment(select_exceedances(transform_rows(s, q), 50, w)), 2);
      CHECK(subspace_distance(rotated.subspace, transform_subspace(fit.subspace, q)) <= 1e-8);
    }
  }

  TEST_CASE("scale invariance under inverse-norm scaling") {
    std::mt19937_64 gen(28);
    const auto s = anisotropic_sample(gen, 300, 5);
    std::vector<double> scaled = s.data();
    for (auto& v : scaled) v *= 3.5;
    const Sample t(s.n(), s.d(), scaled);
    const auto w = ScalingFunction::inverse_norm();
    const auto a = select_exceedances(s, 40, w);
    const auto b = select_exceedances(t, 40, w);
    CHECK(b.threshold == doctest::Approx(3.5 * a.threshold).epsilon(1e-14));
    CHECK(a.indices == b.indices);
    for (std::size_t i = 0; i < a.thetas.size(); ++i)
      CHECK(std::abs(a.thetas[i] - b.thetas[i]) < 1e-14);
    CHECK(subspace_distance(fit_subspace(second_moment(a), 2).subspace,
                            fit_subspace(second_moment(b), 2).subspace) < 1e-10);
  }

  TEST_CASE("risk_curve") {
    std::mt19937_64 gen(29);
    const auto s = anisotropic_sample(gen, 500, 6);
    const std::vector<std::size_t> grid{50, 10, 30, 10};
    const auto w = ScalingFunction::inverse_norm();
    const auto rows = risk_curve(s, w, grid, 6, 1);
    REQUIRE(rows.size() == 18);
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const bool ordered = rows[i - 1].k < rows[i].k ||
                           (rows[i - 1].k == rows[i].k && rows[i - 1].p_tilde < rows[i].p_tilde);
      CHECK(ordered);
    }
    for (const auto& row : rows) {
      const auto c = select_exceedances(s, row.k, w);
      const auto fit = fit_subspace(second_moment(c), row.p_tilde);
      CHECK(std::abs(row.risk - empirical_risk(c, fit.subspace)) < 1e-12);
      if (row.p_tilde == 6) CHECK(row.risk == 0.0);
    }
    // Curve over p~ is non-increasing.
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (rows[i].k == rows[i - 1].k) CHECK(rows[i].risk <= rows[i - 1].risk);
    const auto threaded = risk_curve(s, w, grid, 6, 4);
    for (std::size_t i = 0; i < rows.size(); ++i) CHECK(rows[i].risk == threaded[i].risk);
  }

  TEST_CASE("tail_sums and default grid") {
    const auto t = tail_sums(std::vector<double>{3, 2, 1, -1e-17});
    REQUIRE(t.size() == 5);
    CHECK(t[0] == 6.0);
    CHECK(t[1] == 3.0);
    CHECK(t[3] == 0.0);
    CHECK(t[4] == 0.0);
    const auto g = default_k_grid();
    CHECK(g.size() == 40);
    CHECK(g.front() == 5);
    CHECK(g.back() == 200);
  }

  TEST_CASE("Sample validation") {
    CHECK_THROWS_AS(Sample(1, 1, {1.0}), Error);
    CHECK_THROWS_AS(Sample::from_rows({{1, std::numeric_limits<double>::infinity()}}), Error);
    CHECK_THROWS_AS(Sample::from_rows({{1, 2}, {1}}), Error);
  }
}
