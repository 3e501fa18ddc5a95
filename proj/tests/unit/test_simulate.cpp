#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "xpca/error.hpp"
#include "xpca/simulate.hpp"

using namespace xpca;
using Kind = TailFunctional::Kind;

namespace {

TailFunctional functional(Kind kind, std::size_t p, double alpha, double t = 0.5) {
  TailFunctional f;
  f.kind = kind;
  f.p_split = p;
  f.alpha = alpha;
  f.t_i = t;
  return f;
}

double hill_alpha(std::vector<double> norms, std::size_t top) {
  std::sort(norms.begin(), norms.end(), std::greater<>());
  double s = 0.0;
  for (std::size_t i = 0; i < top; ++i) s += std::log(norms[i] / norms[top]);
  return static_cast<double>(top) / s;
}

SyntheticModel pareto_ray() {
  auto m = SyntheticModel::dirichlet(2, 1, 1.0, 1.0);
  m.noise_variance = 1e-12;
  return m;
}

}  // namespace

TEST_SUITE("simulate") {
  TEST_CASE("RngStream determinism and independence") {
    RngStream a(7, 3), b(7, 3), c(7, 4), e(8, 3);
    bool differs_c = false, differs_e = false;
    for (int i = 0; i < 100; ++i) {
      const auto x = a.next_u64();
      CHECK(x == b.next_u64());
      differs_c = differs_c || x != c.next_u64();
      differs_e = differs_e || x != e.next_u64();
    }
    CHECK(differs_c);
    CHECK(differs_e);
    RngStream u(1, 1);
    for (int i = 0; i < 100000; ++i) {
      const double v = u.uniform();
      REQUIRE(v > 0.0);
      REQUIRE(v < 1.0);
    }
  }

  TEST_CASE("Dirichlet core: construction and moments") {
    RngStream rng(11, 0);
    const std::vector<double> params{1.0, 2.0, 5.0};
    const std::size_t n = 100000;
    std::vector<double> mean(3, 0.0), sq(3, 0.0);
    std::size_t above[3] = {0, 0, 0};
    const double xs[3] = {2.0, 5.0, 10.0};
    for (std::size_t i = 0; i < n; ++i) {
      const auto x = sample_dirichlet_core(3, params, 1.0, rng);
      REQUIRE(x.size() == 3);
      double r = 0.0;
      for (double v : x) {
        REQUIRE(v >= 0.0);
        r += v;
      }
      for (std::size_t j = 0; j < 3; ++j) {
        mean[j] += x[j] / r;
        sq[j] += (x[j] / r) * (x[j] / r);
      }
      for (int j = 0; j < 3; ++j) above[j] += r > xs[j];
    }
    for (std::size_t j = 0; j < 3; ++j) {
      const double m = mean[j] / n;
      const double se = std::sqrt((sq[j] / n - m * m) / n);
      CHECK(std::abs(m - params[j] / 8.0) < 3.0 * se);
    }
    for (int j = 0; j < 3; ++j) {
      const double p = 1.0 / xs[j];
      const double se = std::sqrt(p * (1 - p) / n);
      CHECK(std::abs(static_cast<double>(above[j]) / n - p) < 3.0 * se);
    }
  }

  TEST_CASE("Dirichlet core radial floor") {
    RngStream rng(12, 0);
    const std::vector<double> params{3.0, 3.0};
    std::size_t above = 0;
    for (int i = 0; i < 20000; ++i) {
      const auto x = sample_dirichlet_core(2, params, 2.0, rng, 100.0);
      const double r = x[0] + x[1];
      REQUIRE(r >= 100.0);
      above += r > 200.0;
    }
    // P(R > 2 r0 | R > r0) = 2^{-2}
    CHECK(std::abs(above / 20000.0 - 0.25) < 3.0 * std::sqrt(0.25 * 0.75 / 20000));
  }

  TEST_CASE("Hill estimator recovers the tail index") {
    // Additive noise shifts the norms and biases Hill upward at this sample
    // size (default noise: about 5 for alpha = 1, 2.4 for alpha = 2), so the
    // noise is kept small relative to the top-1% threshold.
    for (double alpha : {1.0, 2.0}) {
      auto m = SyntheticModel::dirichlet(10, 2, alpha, 3.0);
      m.noise_variance = 1e-2;
      RngStream rng(13, 0);
      const auto s = sample_model(m, 100000, rng);
      const double a = hill_alpha(s.norms(), 1000);
      MESSAGE("alpha=" << alpha << ": Hill " << a);
      CHECK(std::abs(a - alpha) <= 0.15);
    }
  }

  TEST_CASE("Gumbel copula at (1/2, 1/2)") {
    RngStream rng(14, 0);
    const std::size_t n = 1000000;
    std::size_t both = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto u = sample_gumbel_uniforms(2, 2.0, rng);
      both += u[0] <= 0.5 && u[1] <= 0.5;
    }
    const double expected = std::exp(-std::sqrt(2.0 * std::log(2.0) * std::log(2.0)));
    CHECK(expected == doctest::Approx(0.3752).epsilon(1e-4));
    const double se = std::sqrt(expected * (1 - expected) / n);
    CHECK(std::abs(static_cast<double>(both) / n - expected) < 3.0 * se);
  }

  TEST_CASE("Gumbel margins are Frechet and theta = 1 is independent") {
    RngStream rng(15, 0);
    const std::size_t n = 200000;
    std::size_t below = 0, tail1 = 0, tail12 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto x = sample_gumbel_core(3, 1.0, 1.0, rng);
      below += x[1] <= 1.0;
      // Frechet(1) 0.99 quantile is 1 / -log(0.99)
      const double q = -1.0 / std::log(0.99);
      tail1 += x[0] > q;
      tail12 += x[0] > q && x[2] > q;
    }
    const double e = std::exp(-1.0);
    CHECK(std::abs(static_cast<double>(below) / n - e) < 3.0 * std::sqrt(e * (1 - e) / n));
    const double lambda = static_cast<double>(tail12) / static_cast<double>(tail1);
    CHECK(lambda < 0.03);

    RngStream dep(16, 0);
    std::size_t t1 = 0, t12 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto x = sample_gumbel_core(2, 2.0, 2.0, dep);
      const double q = std::pow(-1.0 / std::log(0.99), 0.5);
      t1 += x[0] > q;
      t12 += x[0] > q && x[1] > q;
    }
    // Upper tail dependence of the Gumbel copula: 2 - 2^{1/theta}.
    CHECK(static_cast<double>(t12) / static_cast<double>(t1) ==
          doctest::Approx(2.0 - std::sqrt(2.0)).epsilon(0.1));
  }

  TEST_CASE("positive stable variable has Laplace transform exp(-s^a)") {
    RngStream rng(17, 0);
    const std::size_t n = 200000;
    double sum = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = std::exp(-sample_positive_stable(0.5, rng));
      sum += v;
      sq += v * v;
    }
    const double m = sum / n;
    const double se = std::sqrt((sq / n - m * m) / n);
    CHECK(std::abs(m - std::exp(-1.0)) < 4.0 * se);
  }

  TEST_CASE("noise covariance matches the model") {
    auto m = SyntheticModel::dirichlet(4, 2, 2.0);
    m.noise_variance = 3.0;
    const ModelSampler sampler(m);
    const auto sigma = sampler.noise_covariance();
    CHECK(sigma(0, 0) == 3.0);
    CHECK(sigma(1, 3) == doctest::Approx(0.6));
    RngStream rng(18, 0);
    const std::size_t n = 1000000;
    std::vector<double> acc(16, 0.0), x(4);
    for (std::size_t r = 0; r < n; ++r) {
      sampler.draw_noise_premodulus(rng, x);
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) acc[i * 4 + j] += x[i] * x[j];
    }
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        const double se = std::sqrt((sigma(i, i) * sigma(j, j) + sigma(i, j) * sigma(i, j)) / n);
        CHECK(std::abs(acc[i * 4 + j] / n - sigma(i, j)) < 5.0 * se);
      }
  }

  TEST_CASE("rotation is an isometry") {
    RngStream rng(19, 0);
    for (int rep = 0; rep < 1000; ++rep) {
      std::vector<double> x(6);
      for (auto& v : x) v = rng.normal() * 1e3;
      const double before = norm2(x);
      rotate_in_plane(x, rng.index(2), 2 + rng.index(4), (2 * rng.uniform() - 1) * 0.3);
      CHECK(std::abs(norm2(x) - before) <= 1e-12 * before);
    }
    const auto plain = SyntheticModel::dirichlet(10, 2, 1.0);
    const auto rotated = SyntheticModel::dirichlet_rotated(10, 2, 1.0);
    const ModelSampler a(plain), b(rotated);
    std::vector<double> x(10), y(10);
    for (std::uint64_t s = 0; s < 200; ++s) {
      RngStream r1(20, s), r2(20, s);
      a.draw_core(r1, x);
      b.draw_core(r2, y);
      CHECK(std::abs(norm2(x) - norm2(y)) <= 1e-12 * norm2(x));
      double off = 0.0;
      for (std::size_t j = 2; j < 10; ++j) off += std::abs(y[j]);
      const double angle = std::asin(std::min(1.0, off / norm2(y)));
      CHECK(angle <= std::numbers::pi / 10 + 1e-12);
    }
  }

  TEST_CASE("sample_model determinism and support") {
    for (auto m : {SyntheticModel::dirichlet(10, 2, 1.0), SyntheticModel::gumbel(10, 2, 2.0, 2.0),
                   SyntheticModel::dirichlet_rotated(10, 2, 2.0)}) {
      const bool rotated = m.kind == SyntheticModel::Kind::dirichlet_rotated;
      RngStream a(21, 5), b(21, 5), c(21, 6);
      const auto x = sample_model(m, 200, a);
      const auto y = sample_model(m, 200, b);
      const auto z = sample_model(m, 200, c);
      CHECK(x.data() == y.data());
      CHECK(x.data() != z.data());
      // A rotation can push a coordinate below zero before the noise is added.
      if (!rotated)
        for (double v : x.data()) CHECK(v >= 0.0);
    }
    auto quiet = SyntheticModel::dirichlet(6, 3, 1.0);
    quiet.noise_variance = 1e-20;
    RngStream rng(22, 0);
    const auto s = sample_model(quiet, 500, rng);
    for (std::size_t i = 0; i < s.n(); ++i)
      for (std::size_t j = 3; j < 6; ++j) CHECK(s.row(i)[j] <= 1e-6);
  }

  TEST_CASE("model validation") {
    auto m = SyntheticModel::dirichlet(10, 2);
    m.dirichlet_params = {1.0};
    CHECK_THROWS_AS(m.validate(), Error);
    CHECK_THROWS_AS(SyntheticModel::gumbel(10, 2, 2.0, 0.5).validate(), Error);
    CHECK_THROWS_AS(SyntheticModel::dirichlet(3, 3).validate(), Error);
    CHECK_THROWS_AS(default_noise_variance(1.5, 10), Error);
    CHECK(default_noise_variance(1.0, 10) == 1e4);
    CHECK(default_noise_variance(2.0, 10) == 1.0);
    CHECK(parse_model_kind("dirichlet-rotated") == SyntheticModel::Kind::dirichlet_rotated);
    CHECK_THROWS_AS(parse_model_kind("normal"), Error);
  }

  TEST_CASE("mc_oracle degenerate models") {
    OracleOptions opts;
    opts.n_mc = 100000;
    opts.mode = OracleOptions::Mode::direct;
    for (double u : {1.0, 10.0, 100.0}) {
      opts.u = u;
      const auto r = mc_oracle(pareto_ray(), functional(Kind::conditional_single, 1, 1.0), opts, 1);
      CHECK(r.estimate == 1.0);
      CHECK(r.hits == r.events);
    }
    OracleOptions tail;
    tail.n_mc = 100000;
    const auto iv = mc_oracle(SyntheticModel::dirichlet(10, 2, 1.0),
                              functional(Kind::min_contribution, 2, 1.0), tail, 2);
    CHECK(iv.estimate == 0.0);
    CHECK(iv.mode == OracleOptions::Mode::radial_tail);
  }

  TEST_CASE("mc_oracle Dirichlet mean contribution") {
    OracleOptions opts;
    opts.n_mc = 1000000;
    const auto r = mc_oracle(SyntheticModel::dirichlet(10, 2, 1.0),
                             functional(Kind::mean_contribution, 2, 1.0, 0.65), opts, 3);
    CHECK(r.estimate == doctest::Approx(0.684).epsilon(0.03));
    CHECK(r.std_error < 1e-3);
    // Conditioning on ||X|| > u keeps the draws whose R S clears the level.
    CHECK(r.events > 500000);
  }

  TEST_CASE("mc_oracle direct mode targets the event count") {
    OracleOptions opts;
    opts.n_mc = 200000;
    opts.target_events = 2000;
    opts.mode = OracleOptions::Mode::direct;
    const auto r = mc_oracle(SyntheticModel::gumbel(10, 2, 2.0, 2.0),
                             functional(Kind::conditional_single, 2, 2.0), opts, 4);
    CHECK(r.events == 2000);
    CHECK(r.estimate > 0.5);
    CHECK(r.estimate < 0.9);
  }

  TEST_CASE("mc_oracle errors") {
    OracleOptions opts;
    opts.n_mc = 50000;
    const auto m = SyntheticModel::dirichlet(10, 2, 1.0);
    const auto f = functional(Kind::mean_contribution, 2, 1.0, 0.65);
    CHECK_THROWS_AS(mc_oracle(m, f, opts, 1), Error);
    opts.n_mc = 100000;
    opts.mode = OracleOptions::Mode::direct;
    opts.u = 1e12;
    try {
      mc_oracle(m, f, opts, 1);
      FAIL("expected too few exceedances");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::insufficient_exceedances);
    }
    OracleOptions radial;
    radial.n_mc = 100000;
    radial.mode = OracleOptions::Mode::radial_tail;
    CHECK_THROWS_AS(mc_oracle(SyntheticModel::gumbel(10, 2, 2.0, 2.0), f, radial, 1), Error);
  }

  TEST_CASE("mc_oracle is independent of the thread count") {
    const auto m = SyntheticModel::gumbel(10, 2, 2.0, 2.0);
    const std::vector<TailFunctional> fs{functional(Kind::mean_contribution, 2, 2.0, 0.7),
                                         functional(Kind::conditional_single, 2, 2.0)};
    OracleOptions opts;
    opts.n_mc = 100000;
    opts.target_events = 1000;
    opts.threads = 1;
    const auto a = mc_oracle(m, fs, opts, 9);
    opts.threads = 4;
    const auto b = mc_oracle(m, fs, opts, 9);
    for (std::size_t i = 0; i < fs.size(); ++i) {
      CHECK(a[i].estimate == b[i].estimate);
      CHECK(a[i].u == b[i].u);
      CHECK(a[i].events == b[i].events);
    }
  }

  TEST_CASE("mc_oracle standard errors are honest") {
    const auto m = SyntheticModel::dirichlet(10, 2, 1.0);
    const auto f = functional(Kind::mean_contribution, 2, 1.0, 0.65);
    OracleOptions opts;
    opts.n_mc = 100000;
    opts.shards = 8;
    int agree = 0;
    for (std::uint64_t t = 0; t < 100; ++t) {
      const auto a = mc_oracle(m, f, opts, 1000 + 2 * t);
      const auto b = mc_oracle(m, f, opts, 1001 + 2 * t);
      const double se = std::hypot(a.std_error, b.std_error);
      agree += std::abs(a.estimate - b.estimate) < 4.0 * se;
    }
    CHECK(agree >= 99);
  }
}
