#pragma once

// Data-parallel likelihood: batched emission evaluation, column rescaling of
// the transition matrix, and a segmented matrix-chain product whose segment
// results are combined sequentially on the calling thread.

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "zihmm/model.hpp"

namespace zihmm {

enum class Precision { f64, f32 };

/// Largest state count accepted by the parallel engine.
inline constexpr std::size_t kMaxParallelStates = 80;

struct EngineConfig {
  std::size_t workers = 1;
  /// Number of chain segments; 0 picks one segment per worker.
  std::size_t segments = 0;
  std::size_t renorm_period = 8;
  Precision precision = Precision::f64;

  void validate() const;
};

struct SegmentProduct {
  ScaledMatrix product;
  std::size_t lo = 0;  ///< first factor index
  std::size_t hi = 0;  ///< one past the last factor index
};

/// Half-open [lo, hi) blocks of near-equal size; earlier blocks take the
/// remainder.
std::vector<std::pair<std::size_t, std::size_t>> split_segments(std::size_t length,
                                                                std::size_t segments);

/// Row i equals emission_diagonal(params, obs[i]).
EmissionTable batch_emissions(const HmmParams& params, std::span<const Observation> obs,
                              std::size_t workers = 1);

/// Gamma * diag(d): column j of gamma scaled by d_j.
Matrix scale_by_emission(const Matrix& gamma, const Eigen::Ref<const Vector>& diag);

/// Ordered left-to-right products of cfg.segments contiguous blocks of factors.
std::vector<SegmentProduct> segment_chain_product(std::span<const Matrix> factors,
                                                  const EngineConfig& cfg);

/// log(delta^T M_1 ... M_S 1) over the segment products, in order.
double combine_segments(const Vector& delta, std::span<const SegmentProduct> parts);

double parallel_loglik(const HmmParams& params, std::span<const Observation> obs,
                       const EngineConfig& cfg);

/// Pipeline over precomputed emissions; factors are formed inside the segment
/// workers instead of being materialised up front.
double parallel_loglik(const Matrix& gamma, const Vector& delta, const EmissionTable& emissions,
                       const EngineConfig& cfg);

}  // namespace zihmm
