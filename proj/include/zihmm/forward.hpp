#pragma once

// Serial reference likelihood: the scaled Forward recursion and an exhaustive
// path-enumeration oracle for tiny instances.

#include <cstddef>
#include <span>

#include "zihmm/model.hpp"

namespace zihmm {

/// log(delta^T Gamma P(x_0) ... Gamma P(x_N) 1). The running row vector is
/// rescaled to unit max-norm every renorm_period steps.
double forward_loglik(const HmmParams& params, std::span<const Observation> obs,
                      std::size_t renorm_period = 1);

/// Same recursion over precomputed emission diagonals (one row per observation).
double forward_loglik(const Matrix& gamma, const Vector& delta, const EmissionTable& emissions,
                      std::size_t renorm_period = 1);

/// Sum over all K^(N+1) hidden paths in log space. Rejects instances with more
/// than max_paths paths.
double brute_force_loglik(const HmmParams& params, std::span<const Observation> obs,
                          double max_paths = 1e6);

/// Distribution of the hidden state at the last observation given all of obs.
Vector filtered_distribution(const HmmParams& params, std::span<const Observation> obs);

}  // namespace zihmm
