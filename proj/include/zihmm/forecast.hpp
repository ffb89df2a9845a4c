#pragma once

// Posterior-predictive forecasting: one simulated future path per selected
// trace sample, summarised as per-step longitude/latitude histograms.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "zihmm/priors.hpp"
#include "zihmm/trace.hpp"

namespace zihmm {

enum class ForecastStart {
  /// Hidden state propagated from the filtered distribution at the end of the
  /// history (falls back to delta when no history is given).
  filtered,
  delta,
};

struct ForecastConfig {
  std::size_t horizon = 120;
  std::size_t sample_stride = 1000;
  std::size_t max_draws = 500;
  std::uint64_t seed = 1;
  ForecastStart start = ForecastStart::filtered;

  void validate() const;
};

struct ForecastDraw {
  std::size_t source_index = 0;  ///< row of the trace
  std::vector<Observation> observations;
};

/// Number of draws: min(floor(rows / stride), max_draws).
std::size_t forecast_draw_count(std::size_t trace_rows, const ForecastConfig& cfg);

/// Simulates cfg.horizon steps for trace rows stride-1, 2*stride-1, ...
/// Each draw uses its own seeded substream, so output does not depend on
/// scheduling.
std::vector<ForecastDraw> forecast(const Trace& trace, const ForecastConfig& cfg,
                                   std::span<const Observation> history = {});

struct ForecastSummary {
  std::size_t bins = 0;
  Rect bounds;
  std::vector<std::size_t> present;              ///< per step
  std::vector<std::vector<std::size_t>> lon;     ///< per step, per bin
  std::vector<std::vector<std::size_t>> lat;
};

/// Histograms over `bounds` (or the bounding box of all forecast points).
/// Points outside the rectangle are counted in the nearest edge bin.
ForecastSummary forecast_summary(std::span<const ForecastDraw> draws, std::size_t bins,
                                 std::optional<Rect> bounds = std::nullopt);

/// CSV with header step,axis,bin_lo,bin_hi,count (steps numbered from 1).
void write_forecast_summary(std::ostream& os, const ForecastSummary& summary);

}  // namespace zihmm
