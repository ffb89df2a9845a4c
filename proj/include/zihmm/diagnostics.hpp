#pragma once

#include <span>

namespace zihmm {

struct EssResult {
  double value = 0.0;
  /// Set when the series is constant; value is then the series length.
  bool zero_variance = false;
};

/// n / (1 + 2 sum_t rho_t), summing autocorrelations until the first lag t
/// with rho_t + rho_{t+1} < 0. Rejects series shorter than 10.
EssResult effective_sample_size(std::span<const double> series);

}  // namespace zihmm
