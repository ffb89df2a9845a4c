#include "zihmm/priors.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace zihmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool is_spd(const Eigen::Matrix2d& m) {
  return m.allFinite() && std::abs(m(0, 1) - m(1, 0)) <= 1e-12 * m.cwiseAbs().maxCoeff() &&
         m(0, 0) > 0.0 && m.determinant() > 0.0;
}

// log Gamma(shape, 1) variate, accurate for shape << 1 where the variate
// itself may underflow.
double sample_log_gamma(double shape, std::mt19937_64& rng) {
  if (shape >= 1.0) {
    std::gamma_distribution<double> g(shape, 1.0);
    return std::log(g(rng));
  }
  std::gamma_distribution<double> g(shape + 1.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double uu = 0.0;
  while (uu <= 0.0) {
    uu = u(rng);
  }
  return std::log(g(rng)) + std::log(uu) / shape;
}

// log P(a, x) for the regularised lower incomplete gamma. Falls back to the
// series x^a e^-x / Gamma(a+1) * sum_n x^n / ((a+1)...(a+n)) when P underflows.
double log_gamma_p(double a, double x) {
  const double p = boost::math::gamma_p(a, x);
  if (p > 1e-250) {
    return std::log(p);
  }
  double term = 1.0;
  double sum = 1.0;
  for (int n = 1; n < 100000 && term > 1e-17 * sum; ++n) {
    term *= x / (a + n);
    sum += term;
  }
  return a * std::log(x) - x - std::lgamma(a + 1.0) + std::log(sum);
}

}  // namespace

PriorSpec PriorSpec::defaults(std::size_t K, const Rect& bounds) {
  PriorSpec spec;
  spec.mu_bounds = bounds;
  spec.iw_df = std::max<double>(static_cast<double>(K), 2.0);
  return spec;
}

void PriorSpec::validate() const {
  if (!(dirichlet_alpha > 0.0)) {
    throw ValidationError("dirichlet_alpha must be > 0");
  }
  for (const auto* g : {&gamma_low, &gamma_high}) {
    if (!(g->shape > 0.0 && g->rate > 0.0)) {
      throw ValidationError("gamma prior shape and rate must be > 0");
    }
  }
  if (!(mu_bounds.lon_max > mu_bounds.lon_min && mu_bounds.lat_max > mu_bounds.lat_min)) {
    throw ValidationError("mean bounds rectangle is degenerate");
  }
  if (!(iw_df > 1.0)) {
    throw ValidationError("inverse-Wishart degrees of freedom must exceed 1");
  }
  if (!is_spd(iw_scale)) {
    throw ValidationError("inverse-Wishart scale must be symmetric positive definite");
  }
}

double dirichlet_symmetric_logpdf(const Eigen::Ref<const Eigen::VectorXd>& row, double alpha) {
  if (!(alpha > 0.0)) {
    throw ValidationError("Dirichlet concentration must be > 0");
  }
  if ((row.array() <= 0.0).any() || std::abs(row.sum() - 1.0) > 1e-9) {
    throw ValidationError("Dirichlet argument must lie in the open simplex");
  }
  const auto M = static_cast<double>(row.size());
  return std::lgamma(alpha * M) - M * std::lgamma(alpha) +
         (alpha - 1.0) * row.array().log().sum();
}

double gamma_logpdf(double x, double shape, double rate) {
  if (!(x > 0.0)) {
    throw ValidationError("gamma density requires x > 0");
  }
  return shape * std::log(rate) + (shape - 1.0) * std::log(x) - rate * x - std::lgamma(shape);
}

double truncated_gamma_logpdf(double x, double shape, double rate) {
  if (!(x > 0.0 && x < 1.0)) {
    return kNegInf;
  }
  return gamma_logpdf(x, shape, rate) - log_gamma_p(shape, rate);
}

double truncated_gamma_mean(double shape, double rate) {
  return shape / rate * std::exp(log_gamma_p(shape + 1.0, rate) - log_gamma_p(shape, rate));
}

double log_multigamma2(double a) {
  return 0.5 * std::log(std::numbers::pi) + std::lgamma(a) + std::lgamma(a - 0.5);
}

double invwishart_logpdf(const Eigen::Matrix2d& sigma, double nu, const Eigen::Matrix2d& psi) {
  if (!(nu > 1.0)) {
    throw ValidationError("inverse-Wishart requires nu > 1");
  }
  if (!is_spd(sigma) || !is_spd(psi)) {
    throw ValidationError("inverse-Wishart arguments must be symmetric positive definite");
  }
  constexpr double p = 2.0;
  const double log_det_psi = std::log(psi.determinant());
  const double log_det_sigma = std::log(sigma.determinant());
  const double trace = (psi * sigma.inverse()).trace();
  return 0.5 * nu * log_det_psi - 0.5 * nu * p * std::numbers::ln2 - log_multigamma2(0.5 * nu) -
         0.5 * (nu + p + 1.0) * log_det_sigma - 0.5 * trace;
}

GammaShapeRate moment_match_gamma(double mean, double variance) {
  if (!(mean > 0.0 && variance > 0.0)) {
    throw ValidationError("moment matching requires positive mean and variance");
  }
  // mean * rate rather than mean^2 / variance: exact for the decimal inputs
  // used in practice (0.1^2 / 0.001 rounds to 10.000000000000002).
  const double rate = mean / variance;
  return {mean * rate, rate};
}

double log_prior(const HmmParams& params, const PriorSpec& spec) {
  const std::size_t K = params.K();
  double total = 0.0;
  for (std::size_t i = 0; i < K; ++i) {
    const Vector row = params.gamma().row(static_cast<Eigen::Index>(i)).transpose();
    if ((row.array() <= 0.0).any()) {
      return kNegInf;
    }
    total += dirichlet_symmetric_logpdf(row, spec.dirichlet_alpha);
  }
  const double log_area = std::log(spec.mu_bounds.area());
  for (std::size_t k = 0; k < K; ++k) {
    const StateEmission& em = params.state(k);
    const GammaShapeRate& g = spec.p_prior(k, K);
    const double lp = truncated_gamma_logpdf(em.p(), g.shape, g.rate);
    if (!std::isfinite(lp) || !spec.mu_bounds.contains(em.mu())) {
      return kNegInf;
    }
    total += lp - log_area + invwishart_logpdf(em.sigma(), spec.iw_df, spec.iw_scale);
  }
  return total;
}

Eigen::Matrix2d sample_invwishart(double nu, const Eigen::Matrix2d& psi, std::mt19937_64& rng) {
  // Sigma^{-1} ~ Wishart(nu, Psi^{-1}).
  const Eigen::Matrix2d L = psi.inverse().llt().matrixL();
  std::chi_squared_distribution<double> c1(nu);
  std::chi_squared_distribution<double> c2(nu - 1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::Matrix2d A = Eigen::Matrix2d::Zero();
  A(0, 0) = std::sqrt(c1(rng));
  A(1, 0) = z(rng);
  A(1, 1) = std::sqrt(c2(rng));
  const Eigen::Matrix2d LA = L * A;
  Eigen::Matrix2d sigma = (LA * LA.transpose()).inverse();
  sigma(1, 0) = sigma(0, 1);
  return sigma;
}

Vector sample_dirichlet(std::size_t M, double alpha, std::mt19937_64& rng) {
  Vector logs(M);
  for (std::size_t i = 0; i < M; ++i) {
    logs(i) = sample_log_gamma(alpha, rng);
  }
  const double peak = logs.maxCoeff();
  const double lse = peak + std::log((logs.array() - peak).exp().sum());
  return (logs.array() - lse).exp().matrix();
}

double sample_truncated_gamma(const GammaShapeRate& g, std::mt19937_64& rng) {
  const double mass = boost::math::gamma_p(g.shape, g.rate);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (mass < 1e-250) {
    // Almost all mass lies above 1: invert the CDF in log space by bisection.
    const double log_mass = log_gamma_p(g.shape, g.rate);
    double target = 0.0;
    while (target == 0.0) {
      target = u(rng);
    }
    target = std::log(target) + log_mass;
    double lo = 0.0;
    double hi = 1.0;
    for (int i = 0; i < 200 && hi - lo > 1e-16; ++i) {
      const double mid = 0.5 * (lo + hi);
      (log_gamma_p(g.shape, g.rate * mid) < target ? lo : hi) = mid;
    }
    return std::clamp(0.5 * (lo + hi), std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0));
  }
  while (true) {
    const double x = boost::math::gamma_p_inv(g.shape, u(rng) * mass) / g.rate;
    if (x > 0.0 && x < 1.0) {
      return x;
    }
  }
}

HmmParams sample_prior(std::size_t K, const PriorSpec& spec, DeltaMode delta_mode,
                       std::mt19937_64& rng) {
  spec.validate();
  Matrix gamma(K, K);
  for (std::size_t i = 0; i < K; ++i) {
    Vector row = sample_dirichlet(K, spec.dirichlet_alpha, rng);
    row /= row.sum();
    gamma.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  std::uniform_real_distribution<double> lon(spec.mu_bounds.lon_min, spec.mu_bounds.lon_max);
  std::uniform_real_distribution<double> lat(spec.mu_bounds.lat_min, spec.mu_bounds.lat_max);
  std::vector<StateEmission> states;
  states.reserve(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double p = sample_truncated_gamma(spec.p_prior(k, K), rng);
    const double x = lon(rng);
    const double y = lat(rng);
    states.emplace_back(p, Point(x, y), sample_invwishart(spec.iw_df, spec.iw_scale, rng));
  }
  return HmmParams::with_delta_mode(std::move(gamma), std::move(states), delta_mode);
}

}  // namespace zihmm
