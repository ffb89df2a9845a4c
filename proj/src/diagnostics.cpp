#include "zihmm/diagnostics.hpp"

#include <cstddef>
#include <numeric>
#include <vector>

#include "zihmm/errors.hpp"

namespace zihmm {

EssResult effective_sample_size(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 10) {
    throw ValidationError("effective sample size needs at least 10 samples");
  }
  const double mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
  std::vector<double> centred(n);
  for (std::size_t i = 0; i < n; ++i) {
    centred[i] = series[i] - mean;
  }
  const double c0 = std::inner_product(centred.begin(), centred.end(), centred.begin(), 0.0);
  if (!(c0 > 0.0)) {
    return {static_cast<double>(n), true};
  }

  auto rho = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) {
      s += centred[i] * centred[i + lag];
    }
    return s / c0;
  };

  double sum = 0.0;
  double current = rho(1);
  for (std::size_t t = 1; t + 1 < n; ++t) {
    const double next = rho(t + 1);
    if (current + next < 0.0) {
      break;
    }
    sum += current;
    current = next;
  }
  return {static_cast<double>(n) / (1.0 + 2.0 * sum), false};
}

}  // namespace zihmm
