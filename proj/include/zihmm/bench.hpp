#pragma once

// Serial-vs-parallel likelihood timing sweep. Each case draws parameters from
// the prior, simulates a sequence, and times both backends around the
// likelihood call only.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "zihmm/engine.hpp"
#include "zihmm/priors.hpp"

namespace zihmm {

struct BenchConfig {
  std::vector<std::size_t> n_sweep{100, 1000, 10000, 100000};
  std::size_t n_sweep_K = 25;
  std::vector<std::size_t> k_sweep{5, 10, 15, 20, 25, 30, 35, 40, 45, 50};
  std::size_t k_sweep_N = 100000;
  std::size_t reps = 5;
  std::uint64_t seed = 1;
};

struct BenchRow {
  std::string backend;
  std::size_t K = 0;
  std::size_t N = 0;
  std::size_t rep = 0;
  double millis = 0.0;
};

struct BenchMedian {
  std::string backend;
  std::size_t K = 0;
  std::size_t N = 0;
  double median_millis = 0.0;
};

std::vector<BenchRow> run_bench(const BenchConfig& cfg, const EngineConfig& engine,
                                const Rect& bounds);

/// Median per (backend, K, N) in first-seen order.
std::vector<BenchMedian> bench_medians(const std::vector<BenchRow>& rows);

void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows);
void write_bench_medians(std::ostream& os, const std::vector<BenchMedian>& medians);

/// Least-squares slope of log(y) on log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace zihmm
