#include "zihmm/engine.hpp"

#include <oneapi/tbb/blocked_range.h>
#include <oneapi/tbb/global_control.h>
#include <oneapi/tbb/parallel_for.h>
#include <oneapi/tbb/task_arena.h>

#include <cmath>
#include <string>

namespace zihmm {

namespace {

void check_state_count(Eigen::Index K) {
  if (static_cast<std::size_t>(K) > kMaxParallelStates) {
    throw ValidationError("parallel engine supports at most " +
                          std::to_string(kMaxParallelStates) + " states (got " +
                          std::to_string(K) +
                          "); two K x K blocks must fit a compute unit's shared memory");
  }
}

template <class Body>
void run_parallel(std::size_t workers, std::size_t count, Body&& body) {
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      body(i);
    }
    return;
  }
  // Allow more workers than cores when asked for; the arena caps concurrency.
  tbb::global_control limit(tbb::global_control::max_allowed_parallelism, workers);
  tbb::task_arena arena(static_cast<int>(workers));
  arena.execute([&] {
    tbb::parallel_for(
        tbb::blocked_range<std::size_t>(0, count, 1),
        [&](const tbb::blocked_range<std::size_t>& r) {
          for (std::size_t i = r.begin(); i != r.end(); ++i) {
            body(i);
          }
        },
        tbb::simple_partitioner());
  });
}

// Multiplies factors [lo, hi) left to right. fill(i, out, log_scale) writes
// factor i into out and may add to log_scale.
template <class Scalar, class Fill>
BasicScaledMatrix<Scalar> chain_product(std::size_t lo, std::size_t hi, Eigen::Index K,
                                        std::size_t renorm_period, Fill&& fill) {
  using Mat = typename BasicScaledMatrix<Scalar>::MatrixType;
  BasicScaledMatrix<Scalar> acc;
  acc.m.resize(K, K);
  fill(lo, acc.m, acc.log_scale);
  Mat factor(K, K);
  Mat tmp(K, K);
  std::size_t since_norm = 0;
  for (std::size_t i = lo + 1; i < hi; ++i) {
    fill(i, factor, acc.log_scale);
    tmp.noalias() = acc.m * factor;
    acc.m.swap(tmp);
    if (++since_norm == renorm_period) {
      acc.normalize();
      since_norm = 0;
    }
  }
  acc.normalize();
  return acc;
}

template <class Scalar>
std::vector<SegmentProduct> emission_chain(const Matrix& gamma, const EmissionTable& emissions,
                                           const EngineConfig& cfg, std::size_t segments) {
  const auto K = gamma.rows();
  const auto ranges = split_segments(static_cast<std::size_t>(emissions.rows()), segments);
  std::vector<SegmentProduct> parts(ranges.size());

  using Mat = typename BasicScaledMatrix<Scalar>::MatrixType;
  const Mat gamma_s = gamma.cast<Scalar>();

  run_parallel(cfg.workers, ranges.size(), [&](std::size_t s) {
    const auto [lo, hi] = ranges[s];
    auto fill = [&](std::size_t i, Mat& out, double& log_scale) {
      if constexpr (std::is_same_v<Scalar, double>) {
        out.noalias() = gamma_s * emissions.row(i).asDiagonal();
      } else {
        // Single precision: pull each emission vector to unit max first so
        // small densities do not flush to zero.
        const double peak = emissions.row(i).maxCoeff();
        const double inv = peak > 0.0 ? 1.0 / peak : 0.0;
        const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> d = (emissions.row(i) * inv).cast<Scalar>();
        out.noalias() = gamma_s * d.asDiagonal();
        if (peak > 0.0) {
          log_scale += std::log(peak);
        }
      }
    };
    auto product = chain_product<Scalar>(lo, hi, K, cfg.renorm_period, fill);
    parts[s].product.m = product.m.template cast<double>();
    parts[s].product.log_scale = product.log_scale;
    parts[s].lo = lo;
    parts[s].hi = hi;
  });
  return parts;
}

}  // namespace

void EngineConfig::validate() const {
  if (workers < 1) {
    throw ValidationError("workers must be >= 1");
  }
  if (renorm_period < 1) {
    throw ValidationError("renorm_period must be >= 1");
  }
}

std::vector<std::pair<std::size_t, std::size_t>> split_segments(std::size_t length,
                                                                std::size_t segments) {
  if (segments < 1 || segments > length) {
    throw ValidationError("segment count must lie in [1, sequence length]");
  }
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  ranges.reserve(segments);
  const std::size_t base = length / segments;
  const std::size_t extra = length % segments;
  std::size_t lo = 0;
  for (std::size_t s = 0; s < segments; ++s) {
    const std::size_t size = base + (s < extra ? 1 : 0);
    ranges.emplace_back(lo, lo + size);
    lo += size;
  }
  return ranges;
}

EmissionTable batch_emissions(const HmmParams& params, std::span<const Observation> obs,
                              std::size_t workers) {
  const std::size_t K = params.K();
  EmissionTable table(obs.size(), K);
  constexpr std::size_t kBlock = 4096;
  const std::size_t blocks = (obs.size() + kBlock - 1) / kBlock;
  run_parallel(workers, blocks, [&](std::size_t b) {
    const std::size_t lo = b * kBlock;
    const std::size_t hi = std::min(obs.size(), lo + kBlock);
    for (std::size_t i = lo; i < hi; ++i) {
      table.row(i) = emission_diagonal(params, obs[i]).transpose();
    }
  });
  return table;
}

Matrix scale_by_emission(const Matrix& gamma, const Eigen::Ref<const Vector>& diag) {
  if ((diag.array() < 0.0).any()) {
    throw ValidationError("emission entries must be non-negative");
  }
  return gamma * diag.asDiagonal();
}

std::vector<SegmentProduct> segment_chain_product(std::span<const Matrix> factors,
                                                  const EngineConfig& cfg) {
  cfg.validate();
  if (factors.empty()) {
    throw ValidationError("empty matrix chain");
  }
  const auto K = factors.front().rows();
  check_state_count(K);
  const std::size_t segments = cfg.segments == 0 ? std::min(cfg.workers, factors.size())
                                                 : cfg.segments;
  const auto ranges = split_segments(factors.size(), segments);
  std::vector<SegmentProduct> parts(ranges.size());
  run_parallel(cfg.workers, ranges.size(), [&](std::size_t s) {
    const auto [lo, hi] = ranges[s];
    auto fill = [&](std::size_t i, Matrix& out, double&) { out = factors[i]; };
    parts[s].product = chain_product<double>(lo, hi, K, cfg.renorm_period, fill);
    parts[s].lo = lo;
    parts[s].hi = hi;
  });
  return parts;
}

double combine_segments(const Vector& delta, std::span<const SegmentProduct> parts) {
  if (parts.empty()) {
    throw ValidationError("no segment products to combine");
  }
  Eigen::RowVectorXd v = delta.transpose();
  double log_acc = 0.0;
  std::size_t expected_lo = parts.front().lo;
  for (const SegmentProduct& part : parts) {
    if (part.lo != expected_lo || part.hi < part.lo) {
      throw ValidationError("segment products are not ordered and contiguous");
    }
    expected_lo = part.hi;
    v = (v * part.product.m).eval();
    log_acc += part.product.log_scale;
    const double peak = v.maxCoeff();
    if (!(peak > 0.0)) {
      throw NumericalError("likelihood collapsed to zero (data impossible under the model)");
    }
    v /= peak;
    log_acc += std::log(peak);
  }
  return log_acc + std::log(v.sum());
}

double parallel_loglik(const HmmParams& params, std::span<const Observation> obs,
                       const EngineConfig& cfg) {
  if (obs.empty()) {
    throw ValidationError("no observations");
  }
  cfg.validate();
  check_state_count(static_cast<Eigen::Index>(params.K()));
  return parallel_loglik(params.gamma(), params.delta(),
                         batch_emissions(params, obs, cfg.workers), cfg);
}

double parallel_loglik(const Matrix& gamma, const Vector& delta, const EmissionTable& emissions,
                       const EngineConfig& cfg) {
  cfg.validate();
  check_state_count(gamma.rows());
  const auto length = static_cast<std::size_t>(emissions.rows());
  if (length == 0) {
    throw ValidationError("no observations");
  }
  std::size_t segments = cfg.segments == 0 ? cfg.workers : cfg.segments;
  segments = std::min(segments, length);
  const auto parts = cfg.precision == Precision::f64
                         ? emission_chain<double>(gamma, emissions, cfg, segments)
                         : emission_chain<float>(gamma, emissions, cfg, segments);
  return combine_segments(delta, parts);
}

}  // namespace zihmm
