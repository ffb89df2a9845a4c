#pragma once

// Prior densities on the HMM parameters:
//   Gamma rows      ~ symmetric Dirichlet(alpha)
//   p_k             ~ Gamma(shape, rate) truncated to (0, 1)
//   mu_k            ~ Uniform(rectangle)
//   Sigma_k         ~ Inverse-Wishart(nu, Psi)

#include <cstddef>
#include <random>
#include <span>

#include "zihmm/model.hpp"

namespace zihmm {

struct GammaShapeRate {
  double shape = 1.0;
  double rate = 1.0;
};

struct Rect {
  double lon_min = 0.0;
  double lon_max = 1.0;
  double lat_min = 0.0;
  double lat_max = 1.0;

  bool contains(const Point& x) const {
    return x(0) >= lon_min && x(0) <= lon_max && x(1) >= lat_min && x(1) <= lat_max;
  }
  double area() const { return (lon_max - lon_min) * (lat_max - lat_min); }
};

struct PriorSpec {
  double dirichlet_alpha = 0.01;
  GammaShapeRate gamma_low{10.0, 100.0};
  GammaShapeRate gamma_high{810.0, 900.0};
  Rect mu_bounds;
  double iw_df = 2.0;
  Eigen::Matrix2d iw_scale = Eigen::Matrix2d::Identity();

  /// Defaults for K states: nu = max(K, 2), Psi = I.
  static PriorSpec defaults(std::size_t K, const Rect& bounds);

  void validate() const;

  /// Number of states assigned the "low" tremor-probability prior: ceil(K/2).
  static std::size_t low_count(std::size_t K) { return (K + 1) / 2; }
  const GammaShapeRate& p_prior(std::size_t k, std::size_t K) const {
    return k < low_count(K) ? gamma_low : gamma_high;
  }
};

/// log Dir(row | alpha, ..., alpha). Rejects rows off the simplex or with zeros.
double dirichlet_symmetric_logpdf(const Eigen::Ref<const Eigen::VectorXd>& row, double alpha);

double gamma_logpdf(double x, double shape, double rate);

/// Gamma density renormalised to (0, 1); -inf outside.
double truncated_gamma_logpdf(double x, double shape, double rate);

/// Mean of Gamma(shape, rate) conditioned on x < 1.
double truncated_gamma_mean(double shape, double rate);

/// log of the 2-dimensional multivariate gamma function.
double log_multigamma2(double a);

double invwishart_logpdf(const Eigen::Matrix2d& sigma, double nu, const Eigen::Matrix2d& psi);

/// (shape, rate) with the given mean and variance.
GammaShapeRate moment_match_gamma(double mean, double variance);

/// Sum of all prior terms; -inf outside the support.
double log_prior(const HmmParams& params, const PriorSpec& spec);

/// One draw from the prior. Gamma rows may contain exact zeros when a
/// component underflows.
HmmParams sample_prior(std::size_t K, const PriorSpec& spec, DeltaMode delta_mode,
                       std::mt19937_64& rng);

/// Inverse-Wishart draw via the Bartlett decomposition.
Eigen::Matrix2d sample_invwishart(double nu, const Eigen::Matrix2d& psi, std::mt19937_64& rng);

/// Symmetric Dirichlet draw computed in log space.
Vector sample_dirichlet(std::size_t M, double alpha, std::mt19937_64& rng);

double sample_truncated_gamma(const GammaShapeRate& g, std::mt19937_64& rng);

}  // namespace zihmm
