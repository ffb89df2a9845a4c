#include "zihmm/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

namespace zihmm {

namespace {

std::string at_line(std::size_t line, const std::string& what) {
  return "line " + std::to_string(line) + ": " + what;
}

int read_int(const std::string& s, std::size_t pos, std::size_t len) {
  int v = 0;
  const char* first = s.data() + pos;
  const auto res = std::from_chars(first, first + len, v);
  if (res.ec != std::errc() || res.ptr != first + len) {
    throw ValidationError("bad timestamp '" + s + "'");
  }
  return v;
}

std::optional<double> parse_coord(const std::string& field, std::size_t line) {
  if (field.empty()) {
    return std::nullopt;
  }
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (end != field.c_str() + field.size() || !std::isfinite(v)) {
    throw ValidationError(at_line(line, "bad coordinate '" + field + "'"));
  }
  return v;
}

}  // namespace

Rect Dataset::bounding_box(double margin) const {
  constexpr double inf = std::numeric_limits<double>::infinity();
  Rect r{inf, -inf, inf, -inf};
  for (const auto& o : observations) {
    if (o.present()) {
      r.lon_min = std::min(r.lon_min, (*o.value)(0));
      r.lon_max = std::max(r.lon_max, (*o.value)(0));
      r.lat_min = std::min(r.lat_min, (*o.value)(1));
      r.lat_max = std::max(r.lat_max, (*o.value)(1));
    }
  }
  if (!(r.lon_min <= r.lon_max)) {
    throw ValidationError("dataset contains no events; cannot derive bounds");
  }
  const double dx = std::max(r.lon_max - r.lon_min, 1e-3) * margin;
  const double dy = std::max(r.lat_max - r.lat_min, 1e-3) * margin;
  return {r.lon_min - dx, r.lon_max + dx, r.lat_min - dy, r.lat_max + dy};
}

std::int64_t parse_timestamp(const std::string& text) {
  std::string s = text;
  if (!s.empty() && s.back() == 'Z') {
    s.pop_back();
  }
  if (s.size() != 19 || s[4] != '-' || s[7] != '-' || s[10] != 'T' || s[13] != ':' ||
      s[16] != ':') {
    throw ValidationError("bad timestamp '" + text + "' (expected YYYY-MM-DDTHH:MM:SS)");
  }
  using namespace std::chrono;
  const year_month_day ymd{year{read_int(s, 0, 4)}, month{static_cast<unsigned>(read_int(s, 5, 2))},
                           day{static_cast<unsigned>(read_int(s, 8, 2))}};
  const int hh = read_int(s, 11, 2);
  const int mm = read_int(s, 14, 2);
  const int ss = read_int(s, 17, 2);
  if (!ymd.ok() || hh > 23 || mm > 59 || ss > 59) {
    throw ValidationError("bad timestamp '" + text + "'");
  }
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days) * 86400 + hh * 3600 + mm * 60 + ss;
}

std::string format_timestamp(std::int64_t seconds) {
  using namespace std::chrono;
  std::int64_t days = seconds / 86400;
  std::int64_t rem = seconds % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(rem / 3600), static_cast<int>(rem % 3600 / 60),
                static_cast<int>(rem % 60));
  return buf;
}

Dataset parse_dataset(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) {
    throw ValidationError("dataset is empty");
  }
  if (!line.empty() && line.back() == '\r') {
    line.pop_back();
  }
  if (line != "timestamp,lon,lat") {
    throw ValidationError(at_line(1, "header must be 'timestamp,lon,lat'"));
  }
  Dataset data;
  std::optional<std::int64_t> previous;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
      fields.push_back(field);
    }
    if (line.back() == ',') {
      fields.emplace_back();
    }
    if (fields.size() != 3) {
      throw ValidationError(at_line(lineno, "expected 3 fields, got " +
                                                std::to_string(fields.size())));
    }
    std::int64_t t = 0;
    try {
      t = parse_timestamp(fields[0]);
    } catch (const ValidationError& e) {
      throw ValidationError(at_line(lineno, e.what()));
    }
    if (previous && t <= *previous) {
      throw ValidationError(at_line(lineno, "timestamps must be strictly increasing"));
    }
    previous = t;
    const auto lon = parse_coord(fields[1], lineno);
    const auto lat = parse_coord(fields[2], lineno);
    if (lon.has_value() != lat.has_value()) {
      throw ValidationError(at_line(lineno, "lon and lat must both be present or both empty"));
    }
    data.timestamps.push_back(fields[0]);
    data.observations.push_back(lon ? Observation::at(*lon, *lat) : Observation::absent());
  }
  return data;
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open dataset: " + path);
  }
  return parse_dataset(in);
}

void write_dataset(std::ostream& os, const Dataset& data) {
  os << "timestamp,lon,lat\n";
  char buf[96];
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& o = data.observations[i];
    if (o.present()) {
      std::snprintf(buf, sizeof buf, "%.9f,%.9f", (*o.value)(0), (*o.value)(1));
      os << data.timestamps[i] << ',' << buf << '\n';
    } else {
      os << data.timestamps[i] << ",,\n";
    }
  }
}

void write_dataset(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ValidationError("cannot open dataset for writing: " + path);
  }
  write_dataset(out, data);
}

Dataset make_hourly_dataset(std::vector<Observation> observations, const std::string& start) {
  const std::int64_t t0 = parse_timestamp(start);
  Dataset data;
  data.timestamps.reserve(observations.size());
  for (std::size_t i = 0; i < observations.size(); ++i) {
    data.timestamps.push_back(format_timestamp(t0 + static_cast<std::int64_t>(i) * 3600));
  }
  data.observations = std::move(observations);
  return data;
}

}  // namespace zihmm
