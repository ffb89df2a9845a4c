#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <limits>
#include <numbers>

#include "prior_oracles.hpp"
#include "test_support.hpp"
#include "zihmm/priors.hpp"

using namespace zihmm;
using namespace zihmm::testing;

TEST_CASE("dirichlet_symmetric_logpdf") {
  Vector a(3), b(3);
  a << 0.2, 0.3, 0.5;
  b << 0.9, 0.05, 0.05;
  CHECK(dirichlet_symmetric_logpdf(a, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(dirichlet_symmetric_logpdf(b, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-14));

  Vector sparse(3), flat(3);
  sparse << 0.98, 0.01, 0.01;
  flat << 1.0 / 3, 1.0 / 3, 1.0 / 3;
  CHECK(dirichlet_symmetric_logpdf(sparse, 0.01) > dirichlet_symmetric_logpdf(flat, 0.01));

  Vector c(3);
  c << 0.5, 0.3, 0.2;
  CHECK(close_to(dirichlet_symmetric_logpdf(c, 2.0), hp_dirichlet(c, 2.0), 1e-13));

  Vector zero(3), off(3);
  zero << 0.5, 0.5, 0.0;
  off << 0.5, 0.5, 0.1;
  CHECK_THROWS_AS(dirichlet_symmetric_logpdf(zero, 0.5), ValidationError);
  CHECK_THROWS_AS(dirichlet_symmetric_logpdf(off, 0.5), ValidationError);
  CHECK_THROWS_AS(dirichlet_symmetric_logpdf(flat, 0.0), ValidationError);
}

TEST_CASE("gamma_logpdf") {
  CHECK(gamma_logpdf(1.0, 1.0, 1.0) == doctest::Approx(-1.0).epsilon(1e-15));
  const double mode = 0.09;
  CHECK(gamma_logpdf(mode, 10, 100) > gamma_logpdf(mode - 1e-4, 10, 100));
  CHECK(gamma_logpdf(mode, 10, 100) > gamma_logpdf(mode + 1e-4, 10, 100));
  const double v = gamma_logpdf(0.9, 810, 900);
  CHECK(std::isfinite(v));
  CHECK(close_to(v, hp_gamma(0.9, 810, 900), 1e-12));
  CHECK_THROWS_AS(gamma_logpdf(0.0, 1, 1), ValidationError);
  CHECK_THROWS_AS(gamma_logpdf(-1.0, 1, 1), ValidationError);
}

TEST_CASE("truncated gamma") {
  CHECK(truncated_gamma_logpdf(0.0, 10, 100) == -std::numeric_limits<double>::infinity());
  CHECK(truncated_gamma_logpdf(1.0, 10, 100) == -std::numeric_limits<double>::infinity());
  CHECK(truncated_gamma_logpdf(1.2, 10, 100) == -std::numeric_limits<double>::infinity());

  using boost::math::quadrature::gauss_kronrod;
  for (auto [a, b] : {std::pair{10.0, 100.0}, std::pair{810.0, 900.0}, std::pair{2.0, 1.5}}) {
    const auto pdf = [a = a, b = b](double x) { return std::exp(truncated_gamma_logpdf(x, a, b)); };
    const double mass = gauss_kronrod<double, 61>::integrate(pdf, 0.0, 1.0, 15, 1e-13);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
    const double mean = gauss_kronrod<double, 61>::integrate(
        [&](double x) { return x * pdf(x); }, 0.0, 1.0, 15, 1e-13);
    CHECK(truncated_gamma_mean(a, b) == doctest::Approx(mean).epsilon(1e-9));
  }
  // Nearly all mass of Gamma(10, 100) lies below 1.
  CHECK(truncated_gamma_mean(10, 100) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("log_multigamma2 and invwishart_logpdf") {
  const double lg2 = 0.5 * std::log(std::numbers::pi) + std::lgamma(1.5) + std::lgamma(1.0);
  CHECK(log_multigamma2(1.5) == doctest::Approx(lg2).epsilon(1e-15));

  const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
  const double closed = -3.0 * std::log(2.0) - lg2 - 0.0 - 1.0;
  CHECK(invwishart_logpdf(I, 3.0, I) == doctest::Approx(closed).epsilon(1e-14));

  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::Matrix2d s = testing::random_spd(rng);
    const Eigen::Matrix2d psi = testing::random_spd(rng);
    const double nu = 4.0;
    const double c = 2.0;
    const double shift = -0.5 * (nu + 3.0) * 2.0 * std::log(c) +
                         0.5 * (psi * s.inverse()).trace() * (1.0 - 1.0 / c);
    CHECK(invwishart_logpdf(c * s, nu, psi) - invwishart_logpdf(s, nu, psi) ==
          doctest::Approx(shift).epsilon(1e-10));
  }

  Eigen::Matrix2d bad;
  bad << 1, 2, 2, 1;
  CHECK_THROWS_AS(invwishart_logpdf(bad, 3.0, I), ValidationError);
  CHECK_THROWS_AS(invwishart_logpdf(I, 1.0, I), ValidationError);
}

TEST_CASE("invwishart density integrates to one") {
  // Importance sampling over log-Cholesky coordinates (log a, b, log c) with
  // L = [[a, 0], [b, c]] and Sigma = L L^T. A Student-t proposal on each
  // coordinate keeps the weights bounded; |dSigma/dtheta| = 4 a^3 c^2.
  std::mt19937_64 rng(12);
  const double df = 4.0;
  std::student_t_distribution<double> t(df);
  const double log_t_norm =
      std::lgamma((df + 1) / 2) - std::lgamma(df / 2) - 0.5 * std::log(df * std::numbers::pi);
  const auto log_t = [&](double x, double scale) {
    return log_t_norm - std::log(scale) - (df + 1) / 2 * std::log1p((x / scale) * (x / scale) / df);
  };
  for (double nu : {3.0, 6.0}) {
    Eigen::Matrix2d psi;
    psi << 1.5, 0.3, 0.3, 0.8;
    const double scale = 1.0;
    const int n = 400000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const double la = scale * t(rng), b = scale * t(rng), lc = scale * t(rng);
      const double a = std::exp(la), c = std::exp(lc);
      Eigen::Matrix2d L;
      L << a, 0, b, c;
      const Eigen::Matrix2d s = L * L.transpose();
      const double log_q = log_t(la, scale) + log_t(b, scale) + log_t(lc, scale) -
                           (std::log(4.0) + 3 * la + 2 * lc);
      if (s.determinant() <= 0.0) continue;
      sum += std::exp(invwishart_logpdf(s, nu, psi) - log_q);
    }
    CHECK(sum / n == doctest::Approx(1.0).epsilon(0.05));
  }
}

TEST_CASE("moment_match_gamma") {
  const auto lo = moment_match_gamma(0.1, 0.001);
  CHECK(lo.shape == 10.0);
  CHECK(lo.rate == 100.0);
  const auto hi = moment_match_gamma(0.9, 0.001);
  CHECK(hi.shape == 810.0);
  CHECK(hi.rate == 900.0);
  const auto unit = moment_match_gamma(1.0, 1.0);
  CHECK(unit.shape == 1.0);
  CHECK(unit.rate == 1.0);
  CHECK_THROWS_AS(moment_match_gamma(0.0, 1.0), ValidationError);
  CHECK_THROWS_AS(moment_match_gamma(1.0, -1.0), ValidationError);
}

TEST_CASE("prior densities agree with 50-digit evaluation at random points") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const std::size_t M = 2 + static_cast<std::size_t>(u(rng) * 8);
    const double alpha = 0.01 + 3.0 * u(rng);
    const Vector row = testing::random_stochastic(M, rng).row(0).transpose();
    CHECK(close_to(dirichlet_symmetric_logpdf(row, alpha), hp_dirichlet(row, alpha)));

    const double shape = 0.5 + 900 * u(rng);
    const double rate = 0.5 + 900 * u(rng);
    const double x = 1e-3 + 2 * u(rng);
    CHECK(close_to(gamma_logpdf(x, shape, rate), hp_gamma(x, shape, rate)));

    const double y = 0.01 + 0.98 * u(rng);
    const HP mass = boost::math::gamma_p(HP(shape), HP(rate));
    CHECK(close_to(truncated_gamma_logpdf(y, shape, rate), hp_gamma(y, shape, rate) - log(mass)));

    const Eigen::Matrix2d s = testing::random_spd(rng, 0.1 + 3 * u(rng));
    const Eigen::Matrix2d psi = testing::random_spd(rng, 0.1 + 3 * u(rng));
    const double nu = 1.1 + 10 * u(rng);
    CHECK(close_to(invwishart_logpdf(s, nu, psi), hp_invwishart(s, nu, psi)));
  }
}

TEST_CASE("log_prior") {
  const Rect box{0.0, 2.0, 0.0, 1.0};
  PriorSpec spec = PriorSpec::defaults(2, box);
  Matrix g(2, 2);
  g << 0.9, 0.1, 0.2, 0.8;
  Eigen::Matrix2d s0, s1;
  s0 << 0.5, 0.1, 0.1, 0.4;
  s1 << 0.2, 0.0, 0.0, 0.3;
  const HmmParams params(g, Vector::Constant(2, 0.5),
                         {StateEmission(0.12, Point(0.5, 0.5), s0),
                          StateEmission(0.85, Point(1.5, 0.2), s1)});

  const double expected =
      dirichlet_symmetric_logpdf(g.row(0).transpose(), 0.01) +
      dirichlet_symmetric_logpdf(g.row(1).transpose(), 0.01) +
      truncated_gamma_logpdf(0.12, 10, 100) + truncated_gamma_logpdf(0.85, 810, 900) -
      2 * std::log(2.0) + invwishart_logpdf(s0, 2.0, Eigen::Matrix2d::Identity()) +
      invwishart_logpdf(s1, 2.0, Eigen::Matrix2d::Identity());
  CHECK(log_prior(params, spec) == doctest::Approx(expected).epsilon(1e-14));

  const double ninf = -std::numeric_limits<double>::infinity();
  const HmmParams outside(g, Vector::Constant(2, 0.5),
                          {StateEmission(0.12, Point(2.5, 0.5), s0),
                           StateEmission(0.85, Point(1.5, 0.2), s1)});
  CHECK(log_prior(outside, spec) == ninf);

  const HmmParams certain(g, Vector::Constant(2, 0.5),
                          {StateEmission(0.12, Point(0.5, 0.5), s0),
                           StateEmission(1.0, Point(1.5, 0.2), s1)});
  CHECK(log_prior(certain, spec) == ninf);
  CHECK_THROWS_AS(StateEmission(1.2, Point(0, 0), s0), ValidationError);

  Matrix sparse(2, 2);
  sparse << 1.0, 0.0, 0.2, 0.8;
  const HmmParams zero_entry(sparse, Vector::Constant(2, 0.5), params.states());
  CHECK(log_prior(zero_entry, spec) == ninf);
}

TEST_CASE("PriorSpec validation and defaults") {
  const Rect box{0.0, 1.0, 0.0, 1.0};
  CHECK(PriorSpec::defaults(1, box).iw_df == 2.0);
  CHECK(PriorSpec::defaults(5, box).iw_df == 5.0);
  CHECK(PriorSpec::low_count(1) == 1);
  CHECK(PriorSpec::low_count(4) == 2);
  CHECK(PriorSpec::low_count(5) == 3);
  PriorSpec bad = PriorSpec::defaults(3, box);
  bad.dirichlet_alpha = 0.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = PriorSpec::defaults(3, box);
  bad.mu_bounds = Rect{1.0, 1.0, 0.0, 1.0};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = PriorSpec::defaults(3, box);
  bad.iw_df = 1.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("prior samplers") {
  std::mt19937_64 rng(14);
  SUBCASE("inverse-Wishart mean") {
    Eigen::Matrix2d psi;
    psi << 1.0, 0.4, 0.4, 2.0;
    const double nu = 8.0;
    Eigen::Matrix2d mean = Eigen::Matrix2d::Zero();
    const int n = 200000;
    for (int i = 0; i < n; ++i) mean += sample_invwishart(nu, psi, rng);
    mean /= n;
    const Eigen::Matrix2d want = psi / (nu - 3.0);
    CHECK((mean - want).cwiseAbs().maxCoeff() < 0.02);
  }
  SUBCASE("truncated gamma mean") {
    for (const GammaShapeRate g : {GammaShapeRate{10, 100}, GammaShapeRate{810, 900},
                                   GammaShapeRate{2, 1}}) {
      double sum = 0.0;
      const int n = 100000;
      for (int i = 0; i < n; ++i) {
        const double x = sample_truncated_gamma(g, rng);
        REQUIRE(x > 0.0);
        REQUIRE(x < 1.0);
        sum += x;
      }
      CHECK(sum / n == doctest::Approx(truncated_gamma_mean(g.shape, g.rate)).epsilon(0.01));
    }
  }
  SUBCASE("truncated gamma with almost no mass below one") {
    const GammaShapeRate g{800, 10};
    const double want = truncated_gamma_mean(g.shape, g.rate);
    CHECK(want == doctest::Approx(1.0 - 1.0 / 790.0).epsilon(1e-4));
    double sum = 0.0;
    for (int i = 0; i < 2000; ++i) {
      const double x = sample_truncated_gamma(g, rng);
      REQUIRE(x > 0.0);
      REQUIRE(x < 1.0);
      sum += x;
    }
    CHECK(sum / 2000 == doctest::Approx(want).epsilon(1e-3));
    CHECK(std::isfinite(truncated_gamma_logpdf(0.5, g.shape, g.rate)));
  }
  SUBCASE("Dirichlet rows are on the simplex with the right mean") {
    Vector mean = Vector::Zero(4);
    const int n = 50000;
    for (int i = 0; i < n; ++i) {
      const Vector d = sample_dirichlet(4, 0.5, rng);
      REQUIRE(std::abs(d.sum() - 1.0) < 1e-12);
      mean += d;
    }
    mean /= n;
    for (int k = 0; k < 4; ++k) CHECK(mean(k) == doctest::Approx(0.25).epsilon(0.03));
  }
  SUBCASE("sample_prior respects the support") {
    const Rect box{132, 135, 32.5, 34.5};
    const PriorSpec spec = PriorSpec::defaults(4, box);
    for (int i = 0; i < 50; ++i) {
      const HmmParams p = sample_prior(4, spec, DeltaMode::uniform, rng);
      for (const auto& s : p.states()) CHECK(box.contains(s.mu()));
      CHECK((p.gamma().rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
    }
  }
}
