#include "zihmm/config.hpp"

#include <fstream>
#include <thread>

namespace zihmm {

namespace {

using nlohmann::json;

GammaShapeRate gamma_from_json(const json& j) {
  if (j.contains("mean") || j.contains("variance")) {
    return moment_match_gamma(j.at("mean").get<double>(), j.at("variance").get<double>());
  }
  return {j.at("shape").get<double>(), j.at("rate").get<double>()};
}

Eigen::Matrix2d mat2_from_json(const json& j) {
  Eigen::Matrix2d m;
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      m(r, c) = j.at(r).at(c).get<double>();
    }
  }
  return m;
}

json mat2_to_json(const Eigen::Matrix2d& m) {
  return json::array({json::array({m(0, 0), m(0, 1)}), json::array({m(1, 0), m(1, 1)})});
}

template <class T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) {
    out = j.at(key).get<T>();
  }
}

}  // namespace

Backend parse_backend(const std::string& s) {
  if (s == "serial") return Backend::serial;
  if (s == "parallel") return Backend::parallel;
  throw ValidationError("unknown backend '" + s + "' (expected serial or parallel)");
}

Precision parse_precision(const std::string& s) {
  if (s == "f64" || s == "64" || s == "double") return Precision::f64;
  if (s == "f32" || s == "32" || s == "float") return Precision::f32;
  throw ValidationError("unknown precision '" + s + "' (expected f64 or f32)");
}

PriorSpec RunConfig::prior_spec(const Rect& fallback) const {
  PriorSpec spec = prior;
  spec.mu_bounds = mu_bounds.value_or(fallback);
  spec.iw_df = iw_df.value_or(std::max<double>(static_cast<double>(K), 2.0));
  spec.validate();
  return spec;
}

LikelihoodBackend RunConfig::likelihood_backend() const {
  return backend == Backend::serial ? LikelihoodBackend::serial()
                                    : LikelihoodBackend::parallel(engine);
}

void RunConfig::validate() const {
  if (K < 1) {
    throw ValidationError("K must be >= 1");
  }
  if (backend == Backend::parallel && K > kMaxParallelStates) {
    throw ValidationError("parallel backend supports K <= " + std::to_string(kMaxParallelStates));
  }
  engine.validate();
  mcmc.validate();
  forecast.validate();
  if (forecast_bins < 1) {
    throw ValidationError("forecast bins must be >= 1");
  }
  if (bench.reps < 1) {
    throw ValidationError("bench reps must be >= 1");
  }
  prior_spec(mu_bounds.value_or(kDefaultBounds));
}

RunConfig config_from_json(const json& j) {
  RunConfig cfg;
  cfg.engine.workers = std::max(1u, std::thread::hardware_concurrency());
  try {
    read_opt(j, "K", cfg.K);
    if (j.contains("backend")) cfg.backend = parse_backend(j.at("backend").get<std::string>());
    if (j.contains("delta")) {
      const auto d = j.at("delta").get<std::string>();
      if (d == "stationary") {
        cfg.delta_mode = DeltaMode::stationary;
      } else if (d == "uniform") {
        cfg.delta_mode = DeltaMode::uniform;
      } else {
        throw ValidationError("delta must be 'stationary' or 'uniform'");
      }
    }
    if (j.contains("prior")) {
      const json& p = j.at("prior");
      read_opt(p, "dirichlet_alpha", cfg.prior.dirichlet_alpha);
      if (p.contains("gamma_low")) cfg.prior.gamma_low = gamma_from_json(p.at("gamma_low"));
      if (p.contains("gamma_high")) cfg.prior.gamma_high = gamma_from_json(p.at("gamma_high"));
      if (p.contains("mu_bounds")) {
        const auto b = p.at("mu_bounds").get<std::vector<double>>();
        if (b.size() != 4) {
          throw ValidationError("mu_bounds must be [lon_min, lon_max, lat_min, lat_max]");
        }
        cfg.mu_bounds = Rect{b[0], b[1], b[2], b[3]};
      }
      if (p.contains("iw_df")) cfg.iw_df = p.at("iw_df").get<double>();
      if (p.contains("iw_scale")) cfg.prior.iw_scale = mat2_from_json(p.at("iw_scale"));
    }
    if (j.contains("engine")) {
      const json& e = j.at("engine");
      read_opt(e, "workers", cfg.engine.workers);
      read_opt(e, "segments", cfg.engine.segments);
      read_opt(e, "renorm_period", cfg.engine.renorm_period);
      if (e.contains("precision")) {
        cfg.engine.precision = parse_precision(e.at("precision").get<std::string>());
      }
    }
    if (j.contains("mcmc")) {
      const json& m = j.at("mcmc");
      read_opt(m, "iterations", cfg.mcmc.iterations);
      read_opt(m, "thin", cfg.mcmc.thin);
      read_opt(m, "seed", cfg.mcmc.seed);
      read_opt(m, "adapt_fraction", cfg.mcmc.adapt_fraction);
      read_opt(m, "starts", cfg.mcmc.starts);
      if (m.contains("steps")) {
        const json& s = m.at("steps");
        read_opt(s, "gamma_row", cfg.mcmc.steps.gamma_row);
        read_opt(s, "gamma_tail", cfg.mcmc.steps.gamma_tail);
        read_opt(s, "p_logit", cfg.mcmc.steps.p_logit);
        read_opt(s, "mu", cfg.mcmc.steps.mu);
        read_opt(s, "sigma_logchol", cfg.mcmc.steps.sigma_logchol);
      }
    }
    if (j.contains("forecast")) {
      const json& f = j.at("forecast");
      read_opt(f, "horizon", cfg.forecast.horizon);
      read_opt(f, "sample_stride", cfg.forecast.sample_stride);
      read_opt(f, "max_draws", cfg.forecast.max_draws);
      read_opt(f, "seed", cfg.forecast.seed);
      read_opt(f, "bins", cfg.forecast_bins);
      if (f.contains("start")) {
        const auto s = f.at("start").get<std::string>();
        if (s == "filtered") {
          cfg.forecast.start = ForecastStart::filtered;
        } else if (s == "delta") {
          cfg.forecast.start = ForecastStart::delta;
        } else {
          throw ValidationError("forecast start must be 'filtered' or 'delta'");
        }
      }
    }
    if (j.contains("simulate")) {
      const json& s = j.at("simulate");
      read_opt(s, "n", cfg.simulate.n);
      read_opt(s, "seed", cfg.simulate.seed);
      read_opt(s, "start", cfg.simulate.start);
    }
    if (j.contains("bench")) {
      const json& b = j.at("bench");
      read_opt(b, "n_sweep", cfg.bench.n_sweep);
      read_opt(b, "n_sweep_K", cfg.bench.n_sweep_K);
      read_opt(b, "k_sweep", cfg.bench.k_sweep);
      read_opt(b, "k_sweep_N", cfg.bench.k_sweep_N);
      read_opt(b, "reps", cfg.bench.reps);
      read_opt(b, "seed", cfg.bench.seed);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open config: " + path);
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("config " + path + ": " + e.what());
  }
  return config_from_json(j);
}

json params_to_json(const HmmParams& params) {
  const std::size_t K = params.K();
  json gamma = json::array();
  for (std::size_t i = 0; i < K; ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < K; ++j) {
      row.push_back(params.gamma()(i, j));
    }
    gamma.push_back(row);
  }
  json delta = json::array();
  for (std::size_t k = 0; k < K; ++k) {
    delta.push_back(params.delta()(k));
  }
  json states = json::array();
  for (const auto& s : params.states()) {
    states.push_back({{"p", s.p()},
                      {"mu", json::array({s.mu()(0), s.mu()(1)})},
                      {"sigma", mat2_to_json(s.sigma())}});
  }
  return {{"K", K}, {"gamma", gamma}, {"delta", delta}, {"states", states}};
}

HmmParams params_from_json(const json& j) {
  try {
    const auto K = j.at("K").get<std::size_t>();
    Matrix gamma(K, K);
    for (std::size_t r = 0; r < K; ++r) {
      for (std::size_t c = 0; c < K; ++c) {
        gamma(r, c) = j.at("gamma").at(r).at(c).get<double>();
      }
    }
    Vector delta(K);
    for (std::size_t k = 0; k < K; ++k) {
      delta(k) = j.at("delta").at(k).get<double>();
    }
    std::vector<StateEmission> states;
    for (std::size_t k = 0; k < K; ++k) {
      const json& s = j.at("states").at(k);
      states.emplace_back(s.at("p").get<double>(),
                          Point(s.at("mu").at(0).get<double>(), s.at("mu").at(1).get<double>()),
                          mat2_from_json(s.at("sigma")));
    }
    return HmmParams(std::move(gamma), std::move(delta), std::move(states));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("parameter file: ") + e.what());
  }
}

}  // namespace zihmm
