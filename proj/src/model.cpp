#include "zihmm/model.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace zihmm {

namespace {

constexpr double kStochasticTol = 1e-12;

void check_row_stochastic(const Matrix& gamma) {
  const auto K = gamma.rows();
  if (K < 1 || gamma.cols() != K) {
    throw ValidationError("transition matrix must be square with K >= 1");
  }
  if (!gamma.allFinite() || (gamma.array() < 0.0).any()) {
    throw ValidationError("transition matrix entries must be finite and non-negative");
  }
  for (Eigen::Index i = 0; i < K; ++i) {
    if (std::abs(gamma.row(i).sum() - 1.0) > kStochasticTol) {
      throw ValidationError("transition matrix row " + std::to_string(i) +
                            " does not sum to 1");
    }
  }
}

}  // namespace

Observation Observation::at(double lon, double lat) {
  if (!std::isfinite(lon) || !std::isfinite(lat)) {
    throw ValidationError("observation coordinates must be finite");
  }
  return Observation{Point(lon, lat)};
}

StateEmission::StateEmission(double p, const Point& mu, const Eigen::Matrix2d& sigma)
    : p_(p), mu_(mu), sigma_(sigma) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ValidationError("emission probability must lie in [0, 1]");
  }
  if (!mu.allFinite()) {
    throw ValidationError("emission mean must be finite");
  }
  if (!sigma.allFinite()) {
    throw ValidationError("covariance must be finite");
  }
  const double scale = sigma.cwiseAbs().maxCoeff();
  if (std::abs(sigma(0, 1) - sigma(1, 0)) > 1e-12 * scale) {
    throw ValidationError("covariance must be symmetric");
  }
  sigma_(1, 0) = sigma_(0, 1);

  // 2x2 Cholesky by hand; failure means not positive definite.
  const double a2 = sigma_(0, 0);
  if (!(a2 > 0.0)) {
    throw ValidationError("covariance is not positive definite");
  }
  const double a = std::sqrt(a2);
  const double b = sigma_(1, 0) / a;
  const double c2 = sigma_(1, 1) - b * b;
  if (!(c2 > 0.0)) {
    throw ValidationError("covariance is not positive definite");
  }
  const double c = std::sqrt(c2);
  chol_ << a, 0.0, b, c;
  log_det_ = 2.0 * (std::log(a) + std::log(c));
}

HmmParams::HmmParams(Matrix gamma, Vector delta, std::vector<StateEmission> states)
    : gamma_(std::move(gamma)), delta_(std::move(delta)), states_(std::move(states)) {
  check_row_stochastic(gamma_);
  const auto K = gamma_.rows();
  if (static_cast<std::size_t>(K) != states_.size()) {
    throw ValidationError("state count does not match transition matrix");
  }
  if (delta_.size() != K) {
    throw ValidationError("initial distribution has wrong length");
  }
  if (!delta_.allFinite() || (delta_.array() < 0.0).any() ||
      std::abs(delta_.sum() - 1.0) > kStochasticTol) {
    throw ValidationError("initial distribution must be a probability vector");
  }
}

HmmParams HmmParams::with_delta_mode(Matrix gamma, std::vector<StateEmission> states,
                                     DeltaMode mode) {
  check_row_stochastic(gamma);
  const auto K = gamma.rows();
  Vector delta = mode == DeltaMode::stationary
                     ? stationary_distribution(gamma)
                     : Vector::Constant(K, 1.0 / static_cast<double>(K));
  return HmmParams(std::move(gamma), std::move(delta), std::move(states));
}

double bvn_logpdf(const Point& x, const StateEmission& em) {
  const Eigen::Matrix2d& L = em.chol();
  const double d0 = x(0) - em.mu()(0);
  const double d1 = x(1) - em.mu()(1);
  const double z0 = d0 / L(0, 0);
  const double z1 = (d1 - L(1, 0) * z0) / L(1, 1);
  return -std::log(2.0 * std::numbers::pi) - 0.5 * em.log_det() - 0.5 * (z0 * z0 + z1 * z1);
}

Vector emission_diagonal(const HmmParams& params, const Observation& obs) {
  const auto K = params.K();
  Vector diag(K);
  for (std::size_t k = 0; k < K; ++k) {
    const StateEmission& em = params.state(k);
    diag(k) = obs.present() ? em.p() * std::exp(bvn_logpdf(*obs.value, em)) : 1.0 - em.p();
  }
  return diag;
}

void emission_column(const StateEmission& em, std::span<const Observation> obs,
                     EmissionTable& table, std::size_t k) {
  const double absent = 1.0 - em.p();
  for (std::size_t i = 0; i < obs.size(); ++i) {
    table(i, k) = obs[i].present() ? em.p() * std::exp(bvn_logpdf(*obs[i].value, em)) : absent;
  }
}

EmissionTable emission_table(const HmmParams& params, std::span<const Observation> obs) {
  EmissionTable table(obs.size(), params.K());
  for (std::size_t k = 0; k < params.K(); ++k) {
    emission_column(params.state(k), obs, table, k);
  }
  return table;
}

Vector stationary_distribution(const Matrix& gamma, double tol, std::size_t max_iterations) {
  check_row_stochastic(gamma);
  const auto K = gamma.rows();
  Eigen::RowVectorXd pi = Eigen::RowVectorXd::Constant(K, 1.0 / static_cast<double>(K));
  Eigen::RowVectorXd next(K);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    next.noalias() = pi * gamma;
    const double diff = (next - pi).cwiseAbs().maxCoeff();
    pi.swap(next);
    if (diff < tol) {
      return (pi / pi.sum()).transpose();
    }
  }
  throw NumericalError("stationary distribution did not converge (periodic or reducible chain?)");
}

}  // namespace zihmm
