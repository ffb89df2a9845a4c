#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "zihmm/model.hpp"

namespace zihmm {

struct SimulatedPath {
  std::vector<std::size_t> states;
  std::vector<Observation> observations;
};

/// s_0 ~ delta, s_t | s_{t-1} ~ Gamma row, and an event at N(mu, Sigma) with
/// probability p of the current state.
SimulatedPath simulate_path(const HmmParams& params, std::size_t n, std::mt19937_64& rng);

/// As above with s_0 drawn from `initial` instead of delta.
SimulatedPath simulate_path(const HmmParams& params, std::size_t n, const Vector& initial,
                            std::mt19937_64& rng);

/// mu + L z with z standard normal.
Point sample_bvn(const StateEmission& em, std::mt19937_64& rng);

}  // namespace zihmm
