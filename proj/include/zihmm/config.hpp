#pragma once

// Run configuration loaded from a JSON file. Every section is optional:
//
//   {
//     "K": 3, "backend": "parallel", "delta": "stationary",
//     "prior":    {"dirichlet_alpha": 0.01,
//                  "gamma_low":  {"mean": 0.1, "variance": 0.001},
//                  "gamma_high": {"shape": 810, "rate": 900},
//                  "mu_bounds":  [lon_min, lon_max, lat_min, lat_max],
//                  "iw_df": 3, "iw_scale": [[1, 0], [0, 1]]},
//     "engine":   {"workers": 4, "segments": 0, "renorm_period": 8, "precision": "f64"},
//     "mcmc":     {"iterations": 10000, "thin": 10, "seed": 1, "adapt_fraction": 0.2, "starts": 4,
//                  "steps": {"gamma_row": 0.3, "gamma_tail": 20, "p_logit": 0.3, "mu": 0.05,
//                            "sigma_logchol": 0.1}},
//     "forecast": {"horizon": 120, "sample_stride": 1000, "max_draws": 500, "seed": 1,
//                  "bins": 50, "start": "filtered"},
//     "simulate": {"n": 10000, "seed": 1, "start": "2001-01-01T00:00:00"},
//     "bench":    {"n_sweep": [...], "n_sweep_K": 25, "k_sweep": [...], "k_sweep_N": 100000,
//                  "reps": 5, "seed": 1}
//   }

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>

#include "zihmm/bench.hpp"
#include "zihmm/engine.hpp"
#include "zihmm/forecast.hpp"
#include "zihmm/mcmc.hpp"
#include "zihmm/priors.hpp"

namespace zihmm {

enum class Backend { serial, parallel };

struct SimulateConfig {
  std::size_t n = 10000;
  std::uint64_t seed = 1;
  std::string start = "2001-01-01T00:00:00";
};

struct RunConfig {
  std::size_t K = 3;
  Backend backend = Backend::serial;
  DeltaMode delta_mode = DeltaMode::stationary;

  /// Hyperparameters; mu_bounds and iw_df are filled per run when unset.
  PriorSpec prior;
  std::optional<Rect> mu_bounds;
  std::optional<double> iw_df;

  EngineConfig engine;
  McmcConfig mcmc;
  ForecastConfig forecast;
  std::size_t forecast_bins = 50;
  SimulateConfig simulate;
  BenchConfig bench;

  /// Prior for this K; `fallback` supplies the mean rectangle if none is set.
  PriorSpec prior_spec(const Rect& fallback) const;
  LikelihoodBackend likelihood_backend() const;

  void validate() const;
};

/// Rectangle used by `simulate` when the config gives none.
inline constexpr Rect kDefaultBounds{132.0, 135.0, 32.5, 34.5};

RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

nlohmann::json params_to_json(const HmmParams& params);
HmmParams params_from_json(const nlohmann::json& j);

Backend parse_backend(const std::string& s);
Precision parse_precision(const std::string& s);

}  // namespace zihmm
