#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "test_support.hpp"
#include "zihmm/forward.hpp"

using namespace zihmm;

TEST_CASE("all-absent sequence with p = 0.5 everywhere") {
  std::mt19937_64 rng(1);
  for (std::size_t K : {1u, 2u, 5u}) {
    std::vector<StateEmission> s;
    for (std::size_t k = 0; k < K; ++k) {
      s.emplace_back(0.5, Point(0, 0), Eigen::Matrix2d::Identity());
    }
    const HmmParams params(testing::random_stochastic(K, rng), Vector::Constant(K, 1.0 / K), s);
    for (std::size_t n : {1u, 2u, 17u, 1000u}) {
      const std::vector<Observation> obs(n, Observation::absent());
      CHECK(std::abs(forward_loglik(params, obs) - n * std::log(0.5)) < 1e-12 * n);
    }
  }
}

TEST_CASE("all-absent sequence with common p gives (N+1) log(1-p)") {
  std::mt19937_64 rng(2);
  for (double p : {0.1, 0.37, 0.9}) {
    std::vector<StateEmission> s;
    for (int k = 0; k < 4; ++k) s.emplace_back(p, Point(k, 0), Eigen::Matrix2d::Identity());
    const HmmParams params(testing::random_stochastic(4, rng), Vector::Constant(4, 0.25), s);
    const std::vector<Observation> obs(250, Observation::absent());
    CHECK(std::abs(forward_loglik(params, obs) - 250 * std::log1p(-p)) < 1e-12 * 250);
  }
}

TEST_CASE("brute force: single state is the sum of log emissions") {
  Matrix g = Matrix::Ones(1, 1);
  HmmParams params(g, Vector::Ones(1), {StateEmission(0.3, Point(0, 0), Eigen::Matrix2d::Identity())});
  std::mt19937_64 rng(3);
  const auto obs = testing::random_observations(12, rng);
  double expected = 0.0;
  for (const auto& o : obs) expected += std::log(emission_diagonal(params, o)(0));
  CHECK(std::abs(brute_force_loglik(params, obs) - expected) < 1e-12);
}

TEST_CASE("brute force agrees with explicit 2x2 matrix algebra") {
  std::mt19937_64 rng(4);
  const HmmParams params = testing::random_params(2, rng);
  const auto obs = testing::random_observations(2, rng, 0.5);
  const Matrix P0 = emission_diagonal(params, obs[0]).asDiagonal();
  const Matrix P1 = emission_diagonal(params, obs[1]).asDiagonal();
  const double L = (params.delta().transpose() * params.gamma() * P0 * params.gamma() * P1 *
                    Vector::Ones(2))(0);
  CHECK(std::abs(brute_force_loglik(params, obs) - std::log(L)) < 1e-13);
  CHECK(std::abs(forward_loglik(params, obs) - std::log(L)) < 1e-13);
}

TEST_CASE("forward matches brute force on small instances") {
  std::mt19937_64 rng(5);
  SUBCASE("K=2, N=2") {
    const HmmParams params = testing::random_params(2, rng);
    const auto obs = testing::random_observations(3, rng);
    CHECK(std::abs(forward_loglik(params, obs) - brute_force_loglik(params, obs)) < 1e-12);
  }
  SUBCASE("K=3, N=5") {
    const HmmParams params = testing::random_params(3, rng);
    const auto obs = testing::random_observations(6, rng);
    CHECK(std::abs(forward_loglik(params, obs) - brute_force_loglik(params, obs)) < 1e-12);
  }
  SUBCASE("random sweep within the enumeration guard") {
    std::uniform_int_distribution<std::size_t> kd(1, 6);
    for (int rep = 0; rep < 150; ++rep) {
      const std::size_t K = kd(rng);
      const auto max_len = static_cast<std::size_t>(std::floor(6.0 * std::log(10.0) / std::log(std::max<double>(K, 2))));
      std::uniform_int_distribution<std::size_t> nd(1, std::min<std::size_t>(max_len, 14));
      const std::size_t n = nd(rng);
      const HmmParams params = testing::random_params(K, rng);
      const auto obs = testing::random_observations(n, rng);
      CHECK(std::abs(forward_loglik(params, obs) - brute_force_loglik(params, obs)) < 1e-10);
    }
  }
}

TEST_CASE("renormalisation schedule does not change the result") {
  std::mt19937_64 rng(6);
  for (int rep = 0; rep < 20; ++rep) {
    const HmmParams params = testing::random_params(5, rng);
    const auto obs = testing::random_observations(2000, rng);
    const double every = forward_loglik(params, obs, 1);
    const double tenth = forward_loglik(params, obs, 10);
    CHECK(std::abs(every - tenth) < 1e-10);
  }
}

TEST_CASE("relabelling states leaves the likelihood unchanged") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t K = 4;
    const HmmParams params = testing::random_params(K, rng);
    const auto obs = testing::random_observations(500, rng);
    std::vector<std::size_t> perm(K);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix g(K, K);
    Vector d(K);
    std::vector<StateEmission> s;
    for (std::size_t i = 0; i < K; ++i) {
      d(i) = params.delta()(perm[i]);
      s.push_back(params.state(perm[i]));
      for (std::size_t j = 0; j < K; ++j) g(i, j) = params.gamma()(perm[i], perm[j]);
    }
    const HmmParams permuted(g, d, s);
    CHECK(std::abs(forward_loglik(params, obs) - forward_loglik(permuted, obs)) < 1e-12 * 500);
  }
}

TEST_CASE("long sequence stays finite") {
  std::mt19937_64 rng(8);
  const HmmParams params = testing::random_params(25, rng);
  const auto obs = testing::random_observations(10000, rng);
  const double ll = forward_loglik(params, obs);
  CHECK(std::isfinite(ll));
  CHECK(ll < 0.0);
}

TEST_CASE("single observation uses delta^T Gamma P(x0) 1") {
  std::mt19937_64 rng(9);
  const HmmParams params = testing::random_params(3, rng);
  const auto obs = testing::random_observations(1, rng, 1.0);
  const double L = (params.delta().transpose() * params.gamma()).dot(emission_diagonal(params, obs[0]));
  CHECK(std::abs(forward_loglik(params, obs) - std::log(L)) < 1e-14);
}

TEST_CASE("error paths") {
  std::mt19937_64 rng(10);
  const HmmParams params = testing::random_params(3, rng);
  std::vector<Observation> none;
  CHECK_THROWS_AS(forward_loglik(params, none), ValidationError);
  CHECK_THROWS_AS(brute_force_loglik(params, none), ValidationError);
  const auto obs = testing::random_observations(13, rng);  // 3^13 > 1e6
  CHECK_THROWS_AS(brute_force_loglik(params, obs), ValidationError);
  const auto ok = testing::random_observations(12, rng);  // 3^12 = 531441
  CHECK_NOTHROW(brute_force_loglik(params, ok));
}

TEST_CASE("filtered distribution is a probability vector") {
  std::mt19937_64 rng(11);
  const HmmParams params = testing::random_params(4, rng);
  const auto obs = testing::random_observations(300, rng);
  const Vector f = filtered_distribution(params, obs);
  CHECK(std::abs(f.sum() - 1.0) < 1e-12);
  CHECK((f.array() >= 0.0).all());
  // One-step consistency: filtered of a single observation is Bayes' rule.
  const auto one = testing::random_observations(1, rng, 1.0);
  Vector prior = (params.delta().transpose() * params.gamma()).transpose();
  Vector post = prior.cwiseProduct(emission_diagonal(params, one[0]));
  post /= post.sum();
  CHECK((filtered_distribution(params, one) - post).cwiseAbs().maxCoeff() < 1e-14);
}
