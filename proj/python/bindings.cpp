#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "zihmm/cli.hpp"
#include "zihmm/dataset.hpp"
#include "zihmm/diagnostics.hpp"
#include "zihmm/engine.hpp"
#include "zihmm/forward.hpp"
#include "zihmm/mcmc.hpp"
#include "zihmm/simulate.hpp"

namespace py = pybind11;
using namespace zihmm;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// N x 2 array; a row of two NaNs is an hour without an event.
std::vector<Observation> to_observations(const Array& a) {
  if (a.ndim() != 2 || a.shape(1) != 2) {
    throw ValidationError("observations must be an (N, 2) array");
  }
  auto r = a.unchecked<2>();
  std::vector<Observation> out;
  out.reserve(static_cast<std::size_t>(a.shape(0)));
  for (py::ssize_t i = 0; i < a.shape(0); ++i) {
    const bool a_nan = std::isnan(r(i, 0));
    const bool b_nan = std::isnan(r(i, 1));
    if (a_nan && b_nan) {
      out.push_back(Observation::absent());
    } else if (a_nan || b_nan || !std::isfinite(r(i, 0)) || !std::isfinite(r(i, 1))) {
      throw ValidationError("row " + std::to_string(i) +
                            ": coordinates must both be finite or both NaN");
    } else {
      out.push_back(Observation::at(r(i, 0), r(i, 1)));
    }
  }
  return out;
}

py::array_t<double> from_observations(const std::vector<Observation>& obs) {
  py::array_t<double> a({static_cast<py::ssize_t>(obs.size()), py::ssize_t{2}});
  auto w = a.mutable_unchecked<2>();
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const auto ii = static_cast<py::ssize_t>(i);
    w(ii, 0) = obs[i].present() ? (*obs[i].value)(0) : std::nan("");
    w(ii, 1) = obs[i].present() ? (*obs[i].value)(1) : std::nan("");
  }
  return a;
}

DeltaMode parse_delta_mode(const std::string& s) {
  if (s == "stationary") return DeltaMode::stationary;
  if (s == "uniform") return DeltaMode::uniform;
  throw ValidationError("delta_mode must be 'stationary' or 'uniform'");
}

HmmParams make_params(const Matrix& gamma, const Vector& p, const Array& mu, const Array& sigma,
                      std::optional<Vector> delta, const std::string& delta_mode) {
  const auto K = static_cast<py::ssize_t>(p.size());
  if (mu.ndim() != 2 || mu.shape(0) != K || mu.shape(1) != 2) {
    throw ValidationError("mu must have shape (K, 2)");
  }
  if (sigma.ndim() != 3 || sigma.shape(0) != K || sigma.shape(1) != 2 || sigma.shape(2) != 2) {
    throw ValidationError("sigma must have shape (K, 2, 2)");
  }
  auto m = mu.unchecked<2>();
  auto s = sigma.unchecked<3>();
  std::vector<StateEmission> states;
  for (py::ssize_t k = 0; k < K; ++k) {
    Eigen::Matrix2d sk;
    sk << s(k, 0, 0), s(k, 0, 1), s(k, 1, 0), s(k, 1, 1);
    states.emplace_back(p(k), Point(m(k, 0), m(k, 1)), sk);
  }
  if (delta) {
    return HmmParams(gamma, *delta, std::move(states));
  }
  return HmmParams::with_delta_mode(gamma, std::move(states), parse_delta_mode(delta_mode));
}

Rect to_rect(const std::vector<double>& v) {
  if (v.size() != 4) {
    throw ValidationError("mu_bounds must be (lon_min, lon_max, lat_min, lat_max)");
  }
  return Rect{v[0], v[1], v[2], v[3]};
}

Rect bounds_or_box(const std::optional<std::vector<double>>& bounds,
                   const std::vector<Observation>& obs) {
  if (bounds) {
    return to_rect(*bounds);
  }
  Dataset d;
  d.observations = obs;
  return d.bounding_box();
}

EngineConfig engine_config(std::size_t workers, std::size_t segments, std::size_t renorm_period,
                           const std::string& precision) {
  EngineConfig cfg;
  cfg.workers = workers;
  cfg.segments = segments;
  cfg.renorm_period = renorm_period;
  if (precision == "f64") {
    cfg.precision = Precision::f64;
  } else if (precision == "f32") {
    cfg.precision = Precision::f32;
  } else {
    throw ValidationError("precision must be 'f64' or 'f32'");
  }
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Zero-inflated bivariate-Gaussian hidden Markov model";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);

  py::class_<HmmParams>(m, "HmmParams")
      .def(py::init(&make_params), py::arg("gamma"), py::arg("p"), py::arg("mu"),
           py::arg("sigma"), py::arg("delta") = py::none(),
           py::arg("delta_mode") = "stationary",
           "gamma (K, K), p (K,), mu (K, 2), sigma (K, 2, 2). Without delta it is\n"
           "derived from gamma ('stationary' or 'uniform').")
      .def_property_readonly("K", &HmmParams::K)
      .def_property_readonly("gamma", [](const HmmParams& h) { return Matrix(h.gamma()); })
      .def_property_readonly("delta", [](const HmmParams& h) { return Vector(h.delta()); })
      .def_property_readonly("p",
                             [](const HmmParams& h) {
                               Vector p(static_cast<Eigen::Index>(h.K()));
                               for (std::size_t k = 0; k < h.K(); ++k) p(k) = h.state(k).p();
                               return p;
                             })
      .def_property_readonly("mu",
                             [](const HmmParams& h) {
                               Matrix mu(static_cast<Eigen::Index>(h.K()), 2);
                               for (std::size_t k = 0; k < h.K(); ++k)
                                 mu.row(k) = h.state(k).mu().transpose();
                               return mu;
                             })
      .def_property_readonly("sigma", [](const HmmParams& h) {
        py::array_t<double> a({static_cast<py::ssize_t>(h.K()), py::ssize_t{2}, py::ssize_t{2}});
        auto w = a.mutable_unchecked<3>();
        for (std::size_t k = 0; k < h.K(); ++k)
          for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) w(k, i, j) = h.state(k).sigma()(i, j);
        return a;
      });

  m.def(
      "forward_loglik",
      [](const HmmParams& h, const Array& obs, std::size_t renorm_period) {
        return forward_loglik(h, to_observations(obs), renorm_period);
      },
      py::arg("params"), py::arg("obs"), py::arg("renorm_period") = 1,
      "Serial scaled forward log-likelihood.");

  m.def(
      "parallel_loglik",
      [](const HmmParams& h, const Array& obs, std::size_t workers, std::size_t segments,
         std::size_t renorm_period, const std::string& precision) {
        const auto o = to_observations(obs);
        const auto cfg = engine_config(workers, segments, renorm_period, precision);
        py::gil_scoped_release release;
        return parallel_loglik(h, o, cfg);
      },
      py::arg("params"), py::arg("obs"), py::arg("workers") = 1, py::arg("segments") = 0,
      py::arg("renorm_period") = 8, py::arg("precision") = "f64",
      "Segmented matrix-chain log-likelihood.");

  m.def(
      "brute_force_loglik",
      [](const HmmParams& h, const Array& obs, double max_paths) {
        return brute_force_loglik(h, to_observations(obs), max_paths);
      },
      py::arg("params"), py::arg("obs"), py::arg("max_paths") = 1e6);

  m.def(
      "filtered_distribution",
      [](const HmmParams& h, const Array& obs) {
        return filtered_distribution(h, to_observations(obs));
      },
      py::arg("params"), py::arg("obs"));

  m.def(
      "stationary_distribution", [](const Matrix& g) { return stationary_distribution(g); },
      py::arg("gamma"));

  m.def(
      "log_prior",
      [](const HmmParams& h, const std::vector<double>& mu_bounds) {
        return log_prior(h, PriorSpec::defaults(h.K(), to_rect(mu_bounds)));
      },
      py::arg("params"), py::arg("mu_bounds"),
      "Log prior density under the default hyperparameters.");

  m.def(
      "simulate",
      [](const HmmParams& h, std::size_t n, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        const SimulatedPath path = simulate_path(h, n, rng);
        return py::make_tuple(py::array(py::cast(path.states)),
                              from_observations(path.observations));
      },
      py::arg("params"), py::arg("n"), py::arg("seed") = 1,
      "Returns (states, obs) with NaN rows for hours without an event.");

  m.def(
      "effective_sample_size",
      [](const std::vector<double>& series) { return effective_sample_size(series).value; },
      py::arg("series"));

  m.def(
      "fit",
      [](const Array& obs, std::size_t K, std::size_t iterations, std::size_t thin,
         std::uint64_t seed, std::size_t starts, std::optional<std::vector<double>> mu_bounds,
         const std::string& backend, std::size_t workers) {
        const auto o = to_observations(obs);
        const PriorSpec spec = PriorSpec::defaults(K, bounds_or_box(mu_bounds, o));
        McmcConfig cfg;
        cfg.iterations = iterations;
        cfg.thin = thin;
        cfg.seed = seed;
        cfg.starts = starts;
        LikelihoodBackend lb = LikelihoodBackend::serial();
        if (backend == "parallel") {
          lb = LikelihoodBackend::parallel(engine_config(workers, 0, 8, "f64"));
        } else if (backend != "serial") {
          throw ValidationError("backend must be 'serial' or 'parallel'");
        }
        Trace t;
        {
          py::gil_scoped_release release;
          t = run_chain(o, K, spec, cfg, lb);
        }
        const auto names = parameter_names(K);
        py::array_t<double> values(
            {static_cast<py::ssize_t>(t.rows.size()), static_cast<py::ssize_t>(names.size())});
        auto w = values.mutable_unchecked<2>();
        std::vector<std::size_t> iteration;
        std::vector<double> lpost, llik, lprior;
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
          const TraceRow& r = t.rows[i];
          iteration.push_back(r.iteration);
          lpost.push_back(r.log_posterior);
          llik.push_back(r.log_likelihood);
          lprior.push_back(r.log_prior);
          for (std::size_t j = 0; j < names.size(); ++j) w(i, j) = r.values[j];
        }
        py::dict out;
        out["names"] = names;
        out["values"] = values;
        out["iteration"] = py::array(py::cast(iteration));
        out["log_posterior"] = py::array(py::cast(lpost));
        out["log_likelihood"] = py::array(py::cast(llik));
        out["log_prior"] = py::array(py::cast(lprior));
        out["acceptance_rate"] = t.acceptance_rate();
        return out;
      },
      py::arg("obs"), py::arg("K"), py::arg("iterations") = 10000, py::arg("thin") = 1,
      py::arg("seed") = 1, py::arg("starts") = 4, py::arg("mu_bounds") = py::none(),
      py::arg("backend") = "serial", py::arg("workers") = 1,
      "Blockwise Metropolis-Hastings fit. mu_bounds defaults to the padded\n"
      "bounding box of the events.");

  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv{"zihmm"};
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run the command-line tool in-process: (exit code, stdout, stderr).");
}
