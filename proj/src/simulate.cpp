#include "zihmm/simulate.hpp"

namespace zihmm {

namespace {

std::discrete_distribution<std::size_t> categorical(const Eigen::Ref<const Vector>& w) {
  return std::discrete_distribution<std::size_t>(w.data(), w.data() + w.size());
}

}  // namespace

Point sample_bvn(const StateEmission& em, std::mt19937_64& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  const double z0 = z(rng);
  const double z1 = z(rng);
  return em.mu() + em.chol() * Point(z0, z1);
}

SimulatedPath simulate_path(const HmmParams& params, std::size_t n, std::mt19937_64& rng) {
  return simulate_path(params, n, params.delta(), rng);
}

SimulatedPath simulate_path(const HmmParams& params, std::size_t n, const Vector& initial,
                            std::mt19937_64& rng) {
  const std::size_t K = params.K();
  if (static_cast<std::size_t>(initial.size()) != K) {
    throw ValidationError("initial distribution has wrong length");
  }
  std::vector<std::discrete_distribution<std::size_t>> rows;
  rows.reserve(K);
  for (std::size_t i = 0; i < K; ++i) {
    const Vector row = params.gamma().row(static_cast<Eigen::Index>(i)).transpose();
    rows.push_back(categorical(row));
  }
  auto start = categorical(initial);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  SimulatedPath path;
  path.states.reserve(n);
  path.observations.reserve(n);
  std::size_t s = 0;
  for (std::size_t t = 0; t < n; ++t) {
    s = t == 0 ? start(rng) : rows[s](rng);
    path.states.push_back(s);
    const StateEmission& em = params.state(s);
    if (u(rng) < em.p()) {
      path.observations.push_back(Observation{sample_bvn(em, rng)});
    } else {
      path.observations.push_back(Observation::absent());
    }
  }
  return path;
}

}  // namespace zihmm
