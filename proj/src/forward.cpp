#include "zihmm/forward.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace zihmm {

double forward_loglik(const HmmParams& params, std::span<const Observation> obs,
                      std::size_t renorm_period) {
  if (obs.empty()) {
    throw ValidationError("no observations");
  }
  return forward_loglik(params.gamma(), params.delta(), emission_table(params, obs),
                        renorm_period);
}

double forward_loglik(const Matrix& gamma, const Vector& delta, const EmissionTable& emissions,
                      std::size_t renorm_period) {
  if (emissions.rows() == 0) {
    throw ValidationError("no observations");
  }
  if (renorm_period == 0) {
    throw ValidationError("renorm_period must be >= 1");
  }
  const auto K = gamma.rows();
  Eigen::RowVectorXd v = delta.transpose();
  Eigen::RowVectorXd next(K);
  double log_acc = 0.0;
  const auto N = emissions.rows();
  for (Eigen::Index t = 0; t < N; ++t) {
    next.noalias() = v * gamma;
    v = next.cwiseProduct(emissions.row(t));
    if ((t + 1) % static_cast<Eigen::Index>(renorm_period) == 0 || t + 1 == N) {
      const double peak = v.maxCoeff();
      if (!(peak > 0.0)) {
        return -std::numeric_limits<double>::infinity();
      }
      v /= peak;
      log_acc += std::log(peak);
    }
  }
  return log_acc + std::log(v.sum());
}

double brute_force_loglik(const HmmParams& params, std::span<const Observation> obs,
                          double max_paths) {
  if (obs.empty()) {
    throw ValidationError("no observations");
  }
  const std::size_t K = params.K();
  const std::size_t T = obs.size();
  if (static_cast<double>(T) * std::log(static_cast<double>(K)) > std::log(max_paths) + 1e-9) {
    throw ValidationError("instance too large for path enumeration");
  }

  // log of each factor: state at time 0 has law delta^T Gamma.
  std::vector<double> log_init(K, 0.0);
  for (std::size_t j = 0; j < K; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < K; ++i) {
      s += params.delta()(i) * params.gamma()(i, j);
    }
    log_init[j] = std::log(s);
  }
  std::vector<std::vector<double>> log_emit(T, std::vector<double>(K));
  for (std::size_t t = 0; t < T; ++t) {
    const Vector d = emission_diagonal(params, obs[t]);
    for (std::size_t k = 0; k < K; ++k) {
      log_emit[t][k] = std::log(d(k));
    }
  }

  std::vector<std::size_t> path(T, 0);
  const auto advance = [&] {
    for (std::size_t pos = T; pos-- > 0;) {
      if (++path[pos] < K) {
        return true;
      }
      path[pos] = 0;
    }
    return false;
  };

  std::vector<double> terms;
  double best = -std::numeric_limits<double>::infinity();
  do {
    double lp = log_init[path[0]] + log_emit[0][path[0]];
    for (std::size_t t = 1; t < T; ++t) {
      lp += std::log(params.gamma()(path[t - 1], path[t])) + log_emit[t][path[t]];
    }
    terms.push_back(lp);
    best = std::max(best, lp);
  } while (advance());

  if (!std::isfinite(best)) {
    return best;
  }
  double sum = 0.0;
  for (double lp : terms) {
    sum += std::exp(lp - best);
  }
  return best + std::log(sum);
}

Vector filtered_distribution(const HmmParams& params, std::span<const Observation> obs) {
  if (obs.empty()) {
    return params.delta();
  }
  Eigen::RowVectorXd v = params.delta().transpose();
  for (const Observation& x : obs) {
    Eigen::RowVectorXd next = v * params.gamma();
    v = next.cwiseProduct(emission_diagonal(params, x).transpose());
    const double total = v.sum();
    if (!(total > 0.0)) {
      throw NumericalError("observations have zero probability under the model");
    }
    v /= total;
  }
  return v.transpose();
}

}  // namespace zihmm
