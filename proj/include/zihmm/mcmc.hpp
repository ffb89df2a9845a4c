#pragma once

// Blockwise random-walk Metropolis-Hastings over the HMM parameters.
//
// Each block is moved on an unconstrained scale and mapped back:
//   Gamma row  - centred log-ratio coordinates, softmax back
//   Gamma tail - one near-zero entry of a row on the log scale, softmax back
//   p_k        - logit
//   mu_k       - identity
//   Sigma_k    - log-Cholesky (log diagonal, raw off-diagonal)
// The log Jacobian of each map enters the acceptance ratio so the chain
// targets the posterior on the original scale.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>

#include "zihmm/engine.hpp"
#include "zihmm/model.hpp"
#include "zihmm/priors.hpp"
#include "zihmm/trace.hpp"

namespace zihmm {

struct StepSizes {
  double gamma_row = 0.3;
  /// Log-scale step for near-zero transition probabilities. Under a sparse
  /// Dirichlet prior these wander over hundreds of log units, far beyond what
  /// the joint row move can cover.
  double gamma_tail = 20.0;
  double p_logit = 0.3;
  double mu = 0.05;
  double sigma_logchol = 0.1;
};

struct McmcConfig {
  std::size_t iterations = 10000;
  std::size_t thin = 1;
  StepSizes steps;
  std::uint64_t seed = 1;
  /// Leading fraction of iterations during which step sizes are tuned
  /// towards ~30% acceptance; steps are frozen afterwards.
  double adapt_fraction = 0.2;
  DeltaMode delta_mode = DeltaMode::stationary;
  /// Independent prior draws that each run the tuning phase; the one with the
  /// highest log-likelihood at its end becomes the recorded chain. Guards
  /// against chains that settle with an unused state.
  std::size_t starts = 4;
  /// Replace the likelihood by zero (samples the prior).
  bool prior_only = false;

  void validate() const;
};

enum class BlockKind { gamma_row, gamma_tail, p, mu, sigma };

/// Entries below this value are "tail" entries eligible for gamma_tail moves.
inline constexpr double kTailThreshold = 1e-6;

struct Block {
  BlockKind kind;
  std::size_t state;
};

struct Proposal {
  HmmParams params;
  /// log q(current | proposed) - log q(proposed | current) on the original
  /// scale, i.e. the log Jacobian difference of the unconstraining maps.
  double log_ratio;
};

/// All 5K blocks of a state in sweep order.
std::vector<Block> sweep_blocks(std::size_t K);

/// log |d(block)/d(unconstrained)| at params.
double log_jacobian(const HmmParams& params, Block block);

/// Moves one block. Throws NumericalError if the stationary distribution of a
/// proposed transition matrix cannot be computed. A gamma_tail move picks one
/// tail entry of the row uniformly at random; its log_ratio includes the
/// selection probabilities and is -inf when the reverse move is impossible.
/// With no tail entries the state is returned unchanged.
Proposal propose_block(const HmmParams& current, Block block, double step, DeltaMode delta_mode,
                       std::mt19937_64& rng);

/// Moves every block at once.
Proposal propose(const HmmParams& current, const StepSizes& steps, DeltaMode delta_mode,
                 std::mt19937_64& rng);

/// Number of entries of row k below kTailThreshold.
std::size_t tail_count(const HmmParams& params, std::size_t k);

double logit(double p);
double inv_logit(double x);

/// min(1, exp(proposed - current + log_proposal_ratio)).
double acceptance_probability(double log_target_current, double log_target_proposed,
                              double log_proposal_ratio);

bool mh_accept(double log_target_current, double log_target_proposed, double log_proposal_ratio,
               std::mt19937_64& rng);

/// Log-likelihood from parameters and their emission table.
struct LikelihoodBackend {
  std::function<double(const HmmParams&, const EmissionTable&)> loglik;

  static LikelihoodBackend serial();
  static LikelihoodBackend parallel(const EngineConfig& cfg);
};

/// log_prior + log-likelihood; returns -inf without touching the backend when
/// the prior is -inf.
double log_posterior(const HmmParams& params, const PriorSpec& spec,
                     std::span<const Observation> obs, const LikelihoodBackend& backend);

/// Runs the sampler. Row 0 is the initial state drawn from the prior; every
/// thin-th iteration is recorded. With several starts the trace is the full
/// history of the selected one. Throws NumericalError if no prior draw with
/// finite posterior is found in 1000 attempts.
Trace run_chain(std::span<const Observation> obs, std::size_t K, const PriorSpec& spec,
                const McmcConfig& cfg, const LikelihoodBackend& backend);

}  // namespace zihmm
