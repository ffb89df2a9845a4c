#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_support.hpp"
#include "zihmm/bench.hpp"
#include "zihmm/cli.hpp"
#include "zihmm/config.hpp"
#include "zihmm/dataset.hpp"
#include "zihmm/forward.hpp"

using namespace zihmm;
namespace fs = std::filesystem;

namespace {

fs::path tmp(const std::string& name) {
  const fs::path dir = fs::path(ZIHMM_TEST_TMPDIR) / "test_io_files";
  fs::create_directories(dir);
  return dir / name;
}

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "zihmm");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

Dataset parse(const std::string& text) {
  std::istringstream is(text);
  return parse_dataset(is);
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("dataset parsing") {
  const Dataset d = parse(
      "timestamp,lon,lat\n"
      "2001-01-01T00:00:00,,\n"
      "2001-01-01T01:00:00,133.5,33.8\n");
  REQUIRE(d.size() == 2);
  CHECK_FALSE(d.observations[0].present());
  REQUIRE(d.observations[1].present());
  CHECK((*d.observations[1].value)(0) == 133.5);
  CHECK((*d.observations[1].value)(1) == 33.8);
  CHECK(d.timestamps[1] == "2001-01-01T01:00:00");

  CHECK(error_of("timestamp,lon,lat\n2001-01-01T00:00:00,,\n2001-01-01T01:00:00,133.5,\n")
            .find("line 3") != std::string::npos);
  CHECK(error_of("timestamp,lon,lat\n2001-01-01T01:00:00,,\n2001-01-01T00:00:00,,\n")
            .find("line 3") != std::string::npos);
  CHECK(error_of("timestamp,lon,lat\n2001-01-01T00:00:00,1\n").find("line 2") !=
        std::string::npos);
  CHECK(error_of("timestamp,lon,lat\n2001-01-01T00:00:00,abc,1\n").find("line 2") !=
        std::string::npos);
  CHECK(error_of("time,x,y\n").find("line 1") != std::string::npos);
  CHECK_FALSE(error_of("").empty());
}

TEST_CASE("dataset tolerates CRLF and a trailing newline-free last line") {
  const Dataset d = parse("timestamp,lon,lat\r\n2001-01-01T00:00:00,1.5,2.5\r\n2001-01-01T01:00:00,,");
  REQUIRE(d.size() == 2);
  CHECK(d.observations[0].present());
  CHECK_FALSE(d.observations[1].present());
}

TEST_CASE("timestamps") {
  CHECK(parse_timestamp("1970-01-01T00:00:00") == 0);
  CHECK(parse_timestamp("1970-01-02T00:00:01Z") == 86401);
  CHECK(parse_timestamp("2000-03-01T00:00:00") - parse_timestamp("2000-02-28T00:00:00") ==
        2 * 86400);
  CHECK(format_timestamp(parse_timestamp("2001-12-31T23:00:00")) == "2001-12-31T23:00:00");
  for (const char* bad : {"2001-13-01T00:00:00", "2001-02-30T00:00:00", "2001-01-01 00:00:00",
                          "2001-01-01T25:00:00", "yesterday"}) {
    CHECK_THROWS_AS(parse_timestamp(bad), ValidationError);
  }
}

TEST_CASE("dataset write and reload") {
  std::mt19937_64 rng(1);
  const auto obs = testing::random_observations(500, rng);
  const Dataset d = make_hourly_dataset(obs, "2001-01-01T00:00:00");
  CHECK(d.timestamps[25] == "2001-01-02T01:00:00");
  const fs::path p = tmp("roundtrip.csv");
  write_dataset(p.string(), d);
  const Dataset back = load_dataset(p.string());
  REQUIRE(back.size() == d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(back.timestamps[i] == d.timestamps[i]);
    REQUIRE(back.observations[i].present() == d.observations[i].present());
    if (d.observations[i].present()) {
      CHECK(std::abs((*back.observations[i].value - *d.observations[i].value).maxCoeff()) <=
            5e-10);
    }
  }
  const Rect box = d.bounding_box(0.0);
  for (const auto& o : d.observations)
    if (o.present()) CHECK(box.contains(*o.value));
}

TEST_CASE("config parsing") {
  const nlohmann::json j = nlohmann::json::parse(R"({
    "K": 4, "backend": "parallel", "delta": "uniform",
    "prior": {"dirichlet_alpha": 0.5, "gamma_low": {"mean": 0.1, "variance": 0.001},
              "gamma_high": {"shape": 3, "rate": 4}, "mu_bounds": [0, 1, 2, 3], "iw_df": 7},
    "engine": {"workers": 3, "segments": 6, "renorm_period": 4, "precision": "f32"},
    "mcmc": {"iterations": 123, "thin": 7, "seed": 99, "starts": 2, "steps": {"mu": 0.2, "gamma_tail": 5.0}},
    "forecast": {"horizon": 24, "sample_stride": 5, "max_draws": 9, "bins": 11, "start": "delta"},
    "bench": {"n_sweep": [10, 20], "k_sweep": [2], "reps": 2}
  })");
  const RunConfig c = config_from_json(j);
  CHECK(c.K == 4);
  CHECK(c.backend == Backend::parallel);
  CHECK(c.delta_mode == DeltaMode::uniform);
  CHECK(c.prior.dirichlet_alpha == 0.5);
  CHECK(c.prior.gamma_low.shape == doctest::Approx(10.0));
  CHECK(c.prior.gamma_low.rate == doctest::Approx(100.0));
  CHECK(c.prior.gamma_high.shape == 3.0);
  CHECK(c.engine.workers == 3);
  CHECK(c.engine.segments == 6);
  CHECK(c.engine.renorm_period == 4);
  CHECK(c.engine.precision == Precision::f32);
  CHECK(c.mcmc.iterations == 123);
  CHECK(c.mcmc.thin == 7);
  CHECK(c.mcmc.seed == 99);
  CHECK(c.mcmc.steps.mu == 0.2);
  CHECK(c.mcmc.steps.p_logit == StepSizes{}.p_logit);
  CHECK(c.mcmc.steps.gamma_tail == 5.0);
  CHECK(c.mcmc.starts == 2);
  CHECK(c.forecast.horizon == 24);
  CHECK(c.forecast.start == ForecastStart::delta);
  CHECK(c.forecast_bins == 11);
  CHECK(c.bench.n_sweep == std::vector<std::size_t>{10, 20});

  const PriorSpec spec = c.prior_spec(kDefaultBounds);
  CHECK(spec.mu_bounds.lon_max == 1.0);
  CHECK(spec.iw_df == 7.0);
  const PriorSpec fallback = config_from_json(nlohmann::json::object()).prior_spec(kDefaultBounds);
  CHECK(fallback.mu_bounds.lon_min == kDefaultBounds.lon_min);
  CHECK(fallback.iw_df == 3.0);

  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"K": 0})")), ValidationError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"K": 81, "backend": "parallel"})")),
                  ValidationError);
  CHECK_NOTHROW(config_from_json(nlohmann::json::parse(R"({"K": 81, "backend": "serial"})")));
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"backend": "gpu"})")),
                  ValidationError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"mcmc": {"thin": 0}})")),
                  ValidationError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"mcmc": {"starts": 0}})")),
                  ValidationError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"prior": {"mu_bounds": [1, 2]}})")),
                  ValidationError);
}

TEST_CASE("parameter JSON round trip") {
  std::mt19937_64 rng(2);
  const HmmParams p = testing::random_params(3, rng);
  const HmmParams q = params_from_json(nlohmann::json::parse(params_to_json(p).dump()));
  CHECK(q.gamma() == p.gamma());
  CHECK(q.delta() == p.delta());
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(q.state(k).p() == p.state(k).p());
    CHECK(q.state(k).mu() == p.state(k).mu());
    CHECK(q.state(k).sigma() == p.state(k).sigma());
  }
  CHECK_THROWS_AS(params_from_json(nlohmann::json::parse(R"({"gamma": [[1]]})")), ValidationError);
}

TEST_CASE("bench sweep shape") {
  BenchConfig cfg;
  cfg.n_sweep = {50, 100};
  cfg.n_sweep_K = 3;
  cfg.k_sweep = {2, 4, 6};
  cfg.k_sweep_N = 80;
  cfg.reps = 3;
  EngineConfig engine;
  engine.workers = 2;
  const auto rows = run_bench(cfg, engine, kDefaultBounds);
  CHECK(rows.size() == (2 + 3) * 2 * 3);
  for (const auto& r : rows) CHECK(r.millis >= 0.0);
  const auto med = bench_medians(rows);
  CHECK(med.size() == 10);
  std::ostringstream os;
  write_bench_csv(os, rows);
  CHECK(os.str().rfind("backend,K,N,rep,millis\n", 0) == 0);

  CHECK(loglog_slope({1, 10, 100}, {3, 30, 300}) == doctest::Approx(1.0));
  CHECK(loglog_slope({1, 10, 100}, {1, 100, 10000}) == doctest::Approx(2.0));
}

TEST_CASE("CLI end to end") {
  const fs::path data = tmp("sim.csv");
  const fs::path params = tmp("sim.csv.params.json");
  const fs::path cfg = tmp("run.json");
  write_text(cfg, R"({"K": 3, "engine": {"workers": 2, "segments": 3},
                      "mcmc": {"iterations": 60, "thin": 2},
                      "forecast": {"horizon": 12, "sample_stride": 2, "max_draws": 10, "bins": 4}})");

  auto sim = cli({"simulate", "-c", cfg.string(), "--seed", "5", "-n", "800", "-o", data.string()});
  REQUIRE(sim.code == kExitOk);
  CHECK(fs::exists(params));
  const Dataset d = load_dataset(data.string());
  CHECK(d.size() == 800);

  SUBCASE("simulate is deterministic and matches an in-memory rerun") {
    const fs::path again = tmp("sim2.csv");
    REQUIRE(cli({"simulate", "-c", cfg.string(), "--seed", "5", "-n", "800", "-o",
                 again.string()}).code == kExitOk);
    CHECK(slurp(data) == slurp(again));
    CHECK(slurp(params) == slurp(again.string() + ".params.json"));
  }
  SUBCASE("loglik agrees across backends") {
    auto serial = cli({"loglik", "-c", cfg.string(), "-d", data.string(), "-p", params.string(),
                       "--backend", "serial"});
    auto parallel = cli({"loglik", "-c", cfg.string(), "-d", data.string(), "-p",
                         params.string(), "--backend", "parallel", "--segments", "7"});
    REQUIRE(serial.code == kExitOk);
    REQUIRE(parallel.code == kExitOk);
    const double a = std::stod(serial.out.substr(0, serial.out.find(',')));
    const double b = std::stod(parallel.out.substr(0, parallel.out.find(',')));
    CHECK(testing::rel_err(b, a) < 1e-10);
    const HmmParams p = params_from_json(nlohmann::json::parse(slurp(params)));
    CHECK(testing::rel_err(a, forward_loglik(p, d.observations)) < 1e-14);
  }
  SUBCASE("fit then forecast, deterministic outputs") {
    const fs::path trace = tmp("fit.tsv");
    const fs::path trace2 = tmp("fit2.tsv");
    const fs::path fc = tmp("fc.csv");
    const fs::path fc2 = tmp("fc2.csv");
    REQUIRE(cli({"fit", "-c", cfg.string(), "-d", data.string(), "-t", trace.string()}).code ==
            kExitOk);
    REQUIRE(cli({"fit", "-c", cfg.string(), "-d", data.string(), "-t", trace2.string(),
                 "--backend", "serial"}).code == kExitOk);
    CHECK(slurp(trace) == slurp(trace2));
    const std::string summary = slurp(trace.string() + ".summary.csv");
    CHECK(summary.rfind("parameter,mean,sd,ess\n", 0) == 0);
    CHECK(summary.find("\np_1,") != std::string::npos);
    CHECK(read_trace(trace.string()).rows.size() == 30);

    REQUIRE(cli({"forecast", "-c", cfg.string(), "-t", trace.string(), "-d", data.string(), "-o",
                 fc.string()}).code == kExitOk);
    REQUIRE(cli({"forecast", "-c", cfg.string(), "-t", trace.string(), "-d", data.string(), "-o",
                 fc2.string()}).code == kExitOk);
    const std::string text = slurp(fc);
    CHECK(text == slurp(fc2));
    CHECK(text.rfind("step,axis,bin_lo,bin_hi,count\n", 0) == 0);
    // 12 steps x 2 axes x 4 bins plus the header.
    CHECK(std::count(text.begin(), text.end(), '\n') == 12 * 2 * 4 + 1);
  }
  SUBCASE("exit codes") {
    CHECK(cli({}).code == kExitValidation);
    CHECK(cli({"nonsense"}).code == kExitValidation);
    CHECK(cli({"loglik", "-d", tmp("missing.csv").string(), "-p", params.string()}).code ==
          kExitValidation);
    CHECK(cli({"loglik", "-d", data.string(), "-p", params.string(), "--backend", "gpu"}).code ==
          kExitValidation);
    CHECK(cli({"fit", "-d", data.string(), "-t", tmp("x.tsv").string(), "--thin", "0"}).code ==
          kExitValidation);
    // An event far from every state mean makes the data impossible.
    const fs::path bad = tmp("impossible.csv");
    write_text(bad, "timestamp,lon,lat\n2001-01-01T00:00:00,1000000,1000000\n");
    auto r = cli({"loglik", "-d", bad.string(), "-p", params.string()});
    CHECK(r.code == kExitRuntime);
    CHECK(r.err.find("error:") != std::string::npos);
    CHECK(cli({"--help"}).code == kExitOk);
  }
}
