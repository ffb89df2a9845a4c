#include "zihmm/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <random>

#include "zihmm/forward.hpp"
#include "zihmm/simulate.hpp"

namespace zihmm {

namespace {

HmmParams draw_params(std::size_t K, const Rect& bounds, std::mt19937_64& rng) {
  const PriorSpec spec = PriorSpec::defaults(K, bounds);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    try {
      return sample_prior(K, spec, DeltaMode::stationary, rng);
    } catch (const NumericalError&) {
    }
  }
  throw NumericalError("could not draw benchmark parameters from the prior");
}

template <class F>
double time_millis(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  volatile double sink = f();
  (void)sink;
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::vector<BenchRow> run_bench(const BenchConfig& cfg, const EngineConfig& engine,
                                const Rect& bounds) {
  engine.validate();
  std::vector<std::pair<std::size_t, std::size_t>> cases;  // (K, N)
  for (std::size_t n : cfg.n_sweep) cases.emplace_back(cfg.n_sweep_K, n);
  for (std::size_t k : cfg.k_sweep) cases.emplace_back(k, cfg.k_sweep_N);

  std::mt19937_64 rng(cfg.seed);
  std::vector<BenchRow> rows;
  rows.reserve(cases.size() * 2 * cfg.reps);
  for (const auto& [K, N] : cases) {
    const HmmParams params = draw_params(K, bounds, rng);
    const auto obs = simulate_path(params, N, rng).observations;
    for (std::size_t rep = 0; rep < cfg.reps; ++rep) {
      rows.push_back({"serial", K, N, rep,
                      time_millis([&] { return forward_loglik(params, obs); })});
    }
    for (std::size_t rep = 0; rep < cfg.reps; ++rep) {
      rows.push_back({"parallel", K, N, rep,
                      time_millis([&] { return parallel_loglik(params, obs, engine); })});
    }
  }
  return rows;
}

std::vector<BenchMedian> bench_medians(const std::vector<BenchRow>& rows) {
  std::vector<BenchMedian> out;
  std::map<std::tuple<std::string, std::size_t, std::size_t>, std::vector<double>> groups;
  for (const auto& r : rows) {
    auto key = std::make_tuple(r.backend, r.K, r.N);
    if (!groups.contains(key)) {
      out.push_back({r.backend, r.K, r.N, 0.0});
    }
    groups[key].push_back(r.millis);
  }
  for (auto& m : out) {
    m.median_millis = median(groups[std::make_tuple(m.backend, m.K, m.N)]);
  }
  return out;
}

void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows) {
  os << "backend,K,N,rep,millis\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.6f", r.millis);
    os << r.backend << ',' << r.K << ',' << r.N << ',' << r.rep << ',' << buf << '\n';
  }
}

void write_bench_medians(std::ostream& os, const std::vector<BenchMedian>& medians) {
  os << "backend,K,N,median_millis\n";
  char buf[64];
  for (const auto& m : medians) {
    std::snprintf(buf, sizeof buf, "%.6f", m.median_millis);
    os << m.backend << ',' << m.K << ',' << m.N << ',' << buf << '\n';
  }
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw ValidationError("slope needs at least two paired points");
  }
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace zihmm
