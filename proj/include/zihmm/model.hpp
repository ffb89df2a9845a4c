#pragma once

// Domain types of the zero-inflated bivariate-Gaussian HMM.
//
// Observations are either "no event" or a planar point (lon, lat). Each hidden
// state k emits an event with probability p_k; the location of an emitted event
// is N(mu_k, Sigma_k). The emission matrix P(x) is diagonal and represented by
// its diagonal only.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "zihmm/errors.hpp"

namespace zihmm {

using Point = Eigen::Vector2d;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Row i holds the emission diagonal for observation i (N x K).
using EmissionTable = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Observation {
  std::optional<Point> value;

  static Observation absent() { return {}; }
  static Observation at(double lon, double lat);

  bool present() const { return value.has_value(); }
};

/// Emission parameters of one hidden state with a cached Cholesky factor.
class StateEmission {
 public:
  /// Throws ValidationError if p is outside [0, 1], mu is not finite, or sigma
  /// is not symmetric positive definite.
  StateEmission(double p, const Point& mu, const Eigen::Matrix2d& sigma);

  double p() const { return p_; }
  const Point& mu() const { return mu_; }
  const Eigen::Matrix2d& sigma() const { return sigma_; }
  /// Lower-triangular L with L L^T = sigma.
  const Eigen::Matrix2d& chol() const { return chol_; }
  double log_det() const { return log_det_; }

 private:
  double p_;
  Point mu_;
  Eigen::Matrix2d sigma_;
  Eigen::Matrix2d chol_;
  double log_det_;
};

enum class DeltaMode { stationary, uniform };

/// Transition matrix, initial distribution and per-state emissions.
class HmmParams {
 public:
  HmmParams(Matrix gamma, Vector delta, std::vector<StateEmission> states);

  /// delta derived from gamma according to mode.
  static HmmParams with_delta_mode(Matrix gamma, std::vector<StateEmission> states,
                                   DeltaMode mode);

  std::size_t K() const { return states_.size(); }
  const Matrix& gamma() const { return gamma_; }
  const Vector& delta() const { return delta_; }
  const std::vector<StateEmission>& states() const { return states_; }
  const StateEmission& state(std::size_t k) const { return states_[k]; }

 private:
  Matrix gamma_;
  Vector delta_;
  std::vector<StateEmission> states_;
};

/// Represents exp(log_scale) * m.
template <class Scalar>
struct BasicScaledMatrix {
  using MatrixType = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  MatrixType m;
  double log_scale = 0.0;

  /// Divide by the largest entry and fold its log into log_scale. A zero
  /// matrix is left untouched.
  void normalize() {
    const Scalar peak = m.maxCoeff();
    if (peak > Scalar(0)) {
      m /= peak;
      log_scale += std::log(static_cast<double>(peak));
    }
  }
};

using ScaledMatrix = BasicScaledMatrix<double>;

/// log N(x | mu, Sigma) using the cached factor.
double bvn_logpdf(const Point& x, const StateEmission& em);

/// Diagonal of P(x): p_k * phi(x | mu_k, Sigma_k) if present, else 1 - p_k.
Vector emission_diagonal(const HmmParams& params, const Observation& obs);

/// Writes the diagonal for one state across a whole sequence.
void emission_column(const StateEmission& em, std::span<const Observation> obs,
                     EmissionTable& table, std::size_t k);

/// Emission diagonals for a whole sequence, evaluated serially.
EmissionTable emission_table(const HmmParams& params, std::span<const Observation> obs);

/// Left eigenvector of a row-stochastic matrix by power iteration from the
/// uniform vector. Throws NumericalError after max_iterations.
Vector stationary_distribution(const Matrix& gamma, double tol = 1e-12,
                               std::size_t max_iterations = 100000);

}  // namespace zihmm
