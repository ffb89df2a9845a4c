#pragma once

// Hourly observation files: CSV with header `timestamp,lon,lat`, one record
// per line, empty lon/lat for hours without an event.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "zihmm/model.hpp"
#include "zihmm/priors.hpp"

namespace zihmm {

struct Dataset {
  std::vector<std::string> timestamps;
  std::vector<Observation> observations;

  std::size_t size() const { return observations.size(); }
  /// Smallest rectangle holding every present observation, widened by
  /// `margin` times its extent on each side. Throws if nothing is present.
  Rect bounding_box(double margin = 0.05) const;
};

/// Seconds since 1970-01-01T00:00:00 for `YYYY-MM-DDTHH:MM:SS` (optional
/// trailing `Z`). Throws ValidationError on anything else.
std::int64_t parse_timestamp(const std::string& text);
std::string format_timestamp(std::int64_t seconds);

Dataset parse_dataset(std::istream& is);
Dataset load_dataset(const std::string& path);

/// Coordinates are written with 9 decimal places.
void write_dataset(std::ostream& os, const Dataset& data);
void write_dataset(const std::string& path, const Dataset& data);

/// Hourly timestamps starting at `start`.
Dataset make_hourly_dataset(std::vector<Observation> observations, const std::string& start);

}  // namespace zihmm
