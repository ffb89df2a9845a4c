#include "zihmm/forecast.hpp"

#include <oneapi/tbb/parallel_for.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>

#include "zihmm/forward.hpp"
#include "zihmm/simulate.hpp"

namespace zihmm {

void ForecastConfig::validate() const {
  if (horizon < 1) {
    throw ValidationError("forecast horizon must be >= 1");
  }
  if (sample_stride < 1) {
    throw ValidationError("forecast sample stride must be >= 1");
  }
  if (max_draws < 1) {
    throw ValidationError("forecast max_draws must be >= 1");
  }
}

std::size_t forecast_draw_count(std::size_t trace_rows, const ForecastConfig& cfg) {
  return std::min(trace_rows / cfg.sample_stride, cfg.max_draws);
}

std::vector<ForecastDraw> forecast(const Trace& trace, const ForecastConfig& cfg,
                                   std::span<const Observation> history) {
  cfg.validate();
  if (trace.rows.empty()) {
    throw ValidationError("trace is empty");
  }
  const std::size_t count = forecast_draw_count(trace.rows.size(), cfg);
  if (count == 0) {
    throw ValidationError("forecast stride exceeds trace length; no samples selected");
  }
  std::vector<ForecastDraw> draws(count);
  tbb::parallel_for(std::size_t{0}, count, [&](std::size_t j) {
    const std::size_t row = (j + 1) * cfg.sample_stride - 1;
    const HmmParams params = unflatten(trace.rows[row].values, trace.K);
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed),
                      static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(j)};
    std::mt19937_64 rng(seq);
    Vector initial = params.delta();
    if (cfg.start == ForecastStart::filtered && !history.empty()) {
      initial = (filtered_distribution(params, history).transpose() * params.gamma()).transpose();
      initial /= initial.sum();
    }
    draws[j].source_index = row;
    draws[j].observations = simulate_path(params, cfg.horizon, initial, rng).observations;
  });
  return draws;
}

ForecastSummary forecast_summary(std::span<const ForecastDraw> draws, std::size_t bins,
                                 std::optional<Rect> bounds) {
  if (bins < 1) {
    throw ValidationError("histogram needs at least one bin");
  }
  std::size_t horizon = 0;
  for (const auto& d : draws) {
    horizon = std::max(horizon, d.observations.size());
  }

  if (!bounds) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    Rect box{inf, -inf, inf, -inf};
    for (const auto& d : draws) {
      for (const auto& o : d.observations) {
        if (o.present()) {
          box.lon_min = std::min(box.lon_min, (*o.value)(0));
          box.lon_max = std::max(box.lon_max, (*o.value)(0));
          box.lat_min = std::min(box.lat_min, (*o.value)(1));
          box.lat_max = std::max(box.lat_max, (*o.value)(1));
        }
      }
    }
    if (!(box.lon_min <= box.lon_max)) {
      box = Rect{0.0, 1.0, 0.0, 1.0};
    }
    if (box.lon_max == box.lon_min) {
      box.lon_min -= 0.5;
      box.lon_max += 0.5;
    }
    if (box.lat_max == box.lat_min) {
      box.lat_min -= 0.5;
      box.lat_max += 0.5;
    }
    bounds = box;
  }

  ForecastSummary s;
  s.bins = bins;
  s.bounds = *bounds;
  s.present.assign(horizon, 0);
  s.lon.assign(horizon, std::vector<std::size_t>(bins, 0));
  s.lat.assign(horizon, std::vector<std::size_t>(bins, 0));

  auto bin_of = [bins](double x, double lo, double hi) {
    const double f = std::floor((x - lo) / (hi - lo) * static_cast<double>(bins));
    return static_cast<std::size_t>(std::clamp(f, 0.0, static_cast<double>(bins - 1)));
  };
  for (const auto& d : draws) {
    for (std::size_t t = 0; t < d.observations.size(); ++t) {
      const auto& o = d.observations[t];
      if (!o.present()) {
        continue;
      }
      ++s.present[t];
      ++s.lon[t][bin_of((*o.value)(0), s.bounds.lon_min, s.bounds.lon_max)];
      ++s.lat[t][bin_of((*o.value)(1), s.bounds.lat_min, s.bounds.lat_max)];
    }
  }
  return s;
}

void write_forecast_summary(std::ostream& os, const ForecastSummary& summary) {
  os << "step,axis,bin_lo,bin_hi,count\n";
  const auto emit = [&](std::size_t t, const char* axis, const std::vector<std::size_t>& counts,
                        double lo, double hi) {
    const double width = (hi - lo) / static_cast<double>(summary.bins);
    for (std::size_t b = 0; b < summary.bins; ++b) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "%zu,%s,%.9f,%.9f,%zu\n", t + 1, axis,
                    lo + width * static_cast<double>(b), lo + width * static_cast<double>(b + 1),
                    counts[b]);
      os << buf;
    }
  };
  for (std::size_t t = 0; t < summary.present.size(); ++t) {
    emit(t, "lon", summary.lon[t], summary.bounds.lon_min, summary.bounds.lon_max);
    emit(t, "lat", summary.lat[t], summary.bounds.lat_min, summary.bounds.lat_max);
  }
}

}  // namespace zihmm
