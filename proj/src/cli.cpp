#include "zihmm/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>

#include "zihmm/config.hpp"
#include "zihmm/dataset.hpp"
#include "zihmm/diagnostics.hpp"
#include "zihmm/forward.hpp"
#include "zihmm/simulate.hpp"

namespace zihmm {

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::size_t> K;
  std::optional<std::string> backend;
  std::optional<std::size_t> workers;
  std::optional<std::size_t> segments;
  std::optional<std::size_t> renorm_period;
  std::optional<std::string> precision;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config_path, "JSON run configuration");
  cmd->add_option("-K,--states", o.K, "Number of hidden states");
  cmd->add_option("--backend", o.backend, "Likelihood backend: serial or parallel");
  cmd->add_option("--workers", o.workers, "Parallel engine worker threads");
  cmd->add_option("--segments", o.segments, "Matrix-chain segments (0 = one per worker)");
  cmd->add_option("--renorm-period", o.renorm_period, "Products between renormalisations");
  cmd->add_option("--precision", o.precision, "Parallel engine precision: f64 or f32");
  cmd->add_option("--seed", o.seed, "Random seed for this command");
}

RunConfig resolve(const Overrides& o) {
  RunConfig cfg = o.config_path.empty() ? config_from_json(nlohmann::json::object())
                                        : load_config(o.config_path);
  if (o.K) cfg.K = *o.K;
  if (o.backend) cfg.backend = parse_backend(*o.backend);
  if (o.workers) cfg.engine.workers = *o.workers;
  if (o.segments) cfg.engine.segments = *o.segments;
  if (o.renorm_period) cfg.engine.renorm_period = *o.renorm_period;
  if (o.precision) cfg.engine.precision = parse_precision(*o.precision);
  if (o.seed) {
    cfg.mcmc.seed = *o.seed;
    cfg.forecast.seed = *o.seed;
    cfg.simulate.seed = *o.seed;
    cfg.bench.seed = *o.seed;
  }
  cfg.validate();
  return cfg;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ValidationError("cannot open for writing: " + path);
  }
  return out;
}

int cmd_loglik(const Overrides& o, const std::string& data_path, const std::string& params_path,
               std::ostream& out) {
  const RunConfig cfg = resolve(o);
  const Dataset data = load_dataset(data_path);
  std::ifstream pin(params_path);
  if (!pin) {
    throw ValidationError("cannot open parameter file: " + params_path);
  }
  nlohmann::json pj;
  try {
    pin >> pj;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("parameter file: ") + e.what());
  }
  const HmmParams params = params_from_json(pj);

  const auto t0 = std::chrono::steady_clock::now();
  const double ll = cfg.backend == Backend::serial
                        ? forward_loglik(params, data.observations)
                        : parallel_loglik(params, data.observations, cfg.engine);
  const auto t1 = std::chrono::steady_clock::now();
  const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  if (!std::isfinite(ll)) {
    throw NumericalError("data have zero probability under the given parameters");
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.15g,%.3f\n", ll, ms);
  out << buf;
  return kExitOk;
}

int cmd_bench(const Overrides& o, const std::string& out_path, std::ostream& out) {
  const RunConfig cfg = resolve(o);
  const auto rows = run_bench(cfg.bench, cfg.engine, cfg.mu_bounds.value_or(kDefaultBounds));
  if (out_path.empty()) {
    write_bench_csv(out, rows);
  } else {
    auto f = open_out(out_path);
    write_bench_csv(f, rows);
    write_bench_medians(out, bench_medians(rows));
  }
  return kExitOk;
}

int cmd_simulate(const Overrides& o, const std::string& out_path, std::string params_out,
                 std::optional<std::size_t> n, std::ostream& out) {
  RunConfig cfg = resolve(o);
  if (n) cfg.simulate.n = *n;
  const PriorSpec spec = cfg.prior_spec(kDefaultBounds);
  std::mt19937_64 rng(cfg.simulate.seed);
  std::optional<HmmParams> params;
  for (int attempt = 0; attempt < 1000 && !params; ++attempt) {
    try {
      params.emplace(sample_prior(cfg.K, spec, cfg.delta_mode, rng));
    } catch (const NumericalError&) {
    }
  }
  if (!params) {
    throw NumericalError("could not draw parameters from the prior");
  }
  const auto path = simulate_path(*params, cfg.simulate.n, rng);
  const Dataset data = make_hourly_dataset(path.observations, cfg.simulate.start);
  write_dataset(out_path, data);
  if (params_out.empty()) {
    params_out = out_path + ".params.json";
  }
  auto pf = open_out(params_out);
  pf << params_to_json(*params).dump(2) << '\n';
  out << "wrote " << data.size() << " records to " << out_path << " and parameters to "
      << params_out << '\n';
  return kExitOk;
}

int cmd_fit(const Overrides& o, const std::string& data_path, const std::string& trace_path,
            std::string summary_path, std::optional<std::size_t> iterations,
            std::optional<std::size_t> thin, std::ostream& out) {
  RunConfig cfg = resolve(o);
  if (iterations) cfg.mcmc.iterations = *iterations;
  if (thin) cfg.mcmc.thin = *thin;
  cfg.mcmc.delta_mode = cfg.delta_mode;
  cfg.validate();
  const Dataset data = load_dataset(data_path);
  const PriorSpec spec = cfg.prior_spec(data.bounding_box());
  const Trace trace =
      run_chain(data.observations, cfg.K, spec, cfg.mcmc, cfg.likelihood_backend());
  write_trace(trace_path, trace);

  if (summary_path.empty()) {
    summary_path = trace_path + ".summary.csv";
  }
  auto sf = open_out(summary_path);
  sf << "parameter,mean,sd,ess\n";
  std::vector<std::string> names{"posterior", "likelihood", "prior"};
  for (auto& n : parameter_names(cfg.K)) names.push_back(n);
  for (const auto& name : names) {
    const auto col = trace.column(name);
    double mean = 0.0;
    for (double v : col) mean += v;
    mean /= static_cast<double>(col.size());
    double var = 0.0;
    for (double v : col) var += (v - mean) * (v - mean);
    const double sd = col.size() > 1 ? std::sqrt(var / static_cast<double>(col.size() - 1)) : 0.0;
    char buf[160];
    if (col.size() >= 10) {
      const double ess = effective_sample_size(col).value;
      std::snprintf(buf, sizeof buf, ",%.12g,%.12g,%.3f\n", mean, sd, ess);
    } else {
      std::snprintf(buf, sizeof buf, ",%.12g,%.12g,\n", mean, sd);
    }
    sf << name << buf;
  }
  out << "wrote " << trace.rows.size() << " samples to " << trace_path
      << " (acceptance " << trace.acceptance_rate() << ")\n";
  return kExitOk;
}

int cmd_forecast(const Overrides& o, const std::string& trace_path, const std::string& out_path,
                 const std::string& data_path, std::optional<std::string> start,
                 std::ostream& out) {
  RunConfig cfg = resolve(o);
  if (start) {
    if (*start == "filtered") {
      cfg.forecast.start = ForecastStart::filtered;
    } else if (*start == "delta") {
      cfg.forecast.start = ForecastStart::delta;
    } else {
      throw ValidationError("--start must be 'filtered' or 'delta'");
    }
  }
  const Trace trace = read_trace(trace_path);
  std::optional<Dataset> data;
  if (!data_path.empty()) {
    data = load_dataset(data_path);
  }
  const std::span<const Observation> history =
      data ? std::span<const Observation>(data->observations) : std::span<const Observation>();
  const auto draws = forecast(trace, cfg.forecast, history);
  std::optional<Rect> bounds = cfg.mu_bounds;
  if (!bounds && data) {
    bounds = data->bounding_box();
  }
  const auto summary = forecast_summary(draws, cfg.forecast_bins, bounds);
  if (out_path.empty()) {
    write_forecast_summary(out, summary);
  } else {
    auto f = open_out(out_path);
    write_forecast_summary(f, summary);
    out << "wrote forecast summary of " << draws.size() << " draws to " << out_path << '\n';
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Zero-inflated bivariate-Gaussian HMM: likelihood, fitting and forecasting"};
  app.require_subcommand(1);

  Overrides o;
  std::string data_path, params_path, out_path, trace_path, summary_path, params_out;
  std::optional<std::size_t> n, iterations, thin;
  std::optional<std::string> start;

  auto* loglik = app.add_subcommand("loglik", "Evaluate the log-likelihood once and time it");
  add_common(loglik, o);
  loglik->add_option("-d,--data", data_path, "Dataset CSV")->required();
  loglik->add_option("-p,--params", params_path, "Parameter JSON")->required();

  auto* bench = app.add_subcommand("bench", "Serial vs parallel timing sweep");
  add_common(bench, o);
  bench->add_option("-o,--out", out_path, "Benchmark CSV (default: stdout)");

  auto* fit = app.add_subcommand("fit", "Run the Metropolis-Hastings sampler");
  add_common(fit, o);
  fit->add_option("-d,--data", data_path, "Dataset CSV")->required();
  fit->add_option("-t,--trace", trace_path, "Trace TSV output")->required();
  fit->add_option("-s,--summary", summary_path, "Posterior summary CSV");
  fit->add_option("--iterations", iterations, "MCMC iterations");
  fit->add_option("--thin", thin, "Record every thin-th iteration");

  auto* sim = app.add_subcommand("simulate", "Draw parameters from the prior and simulate data");
  add_common(sim, o);
  sim->add_option("-o,--out", out_path, "Dataset CSV output")->required();
  sim->add_option("--params-out", params_out, "True-parameter JSON (default: <out>.params.json)");
  sim->add_option("-n,--length", n, "Number of hourly records");

  auto* fc = app.add_subcommand("forecast", "Posterior-predictive forecast from a trace");
  add_common(fc, o);
  fc->add_option("-t,--trace", trace_path, "Trace TSV")->required();
  fc->add_option("-o,--out", out_path, "Forecast summary CSV (default: stdout)");
  fc->add_option("-d,--data", data_path, "Training data for the filtered start");
  fc->add_option("--start", start, "Initial hidden-state law: filtered or delta");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*loglik) return cmd_loglik(o, data_path, params_path, out);
    if (*bench) return cmd_bench(o, out_path, out);
    if (*fit) return cmd_fit(o, data_path, trace_path, summary_path, iterations, thin, out);
    if (*sim) return cmd_simulate(o, out_path, params_out, n, out);
    if (*fc) return cmd_forecast(o, trace_path, out_path, data_path, start, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitValidation;
}

}  // namespace zihmm
