#include "zihmm/mcmc.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <numbers>

#include "zihmm/forward.hpp"

namespace zihmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::size_t kAdaptWindow = 50;
constexpr double kTargetAcceptance = 0.3;
constexpr std::size_t kMaxInitialDraws = 1000;

std::vector<StateEmission> replace_state(const HmmParams& params, std::size_t k,
                                         StateEmission em) {
  std::vector<StateEmission> states = params.states();
  states[k] = std::move(em);
  return states;
}

double block_step(const StepSizes& steps, BlockKind kind) {
  switch (kind) {
    case BlockKind::gamma_row: return steps.gamma_row;
    case BlockKind::gamma_tail: return steps.gamma_tail;
    case BlockKind::p: return steps.p_logit;
    case BlockKind::mu: return steps.mu;
    case BlockKind::sigma: return steps.sigma_logchol;
  }
  return 0.0;
}

bool touches_emission(BlockKind kind) {
  return kind != BlockKind::gamma_row && kind != BlockKind::gamma_tail;
}

// Largest adapted step per block kind; tail moves need room for jumps of
// hundreds of log units.
double max_step(BlockKind kind) { return kind == BlockKind::gamma_tail ? 1000.0 : 10.0; }

// Row with log-entries u, normalised in log space so tiny entries survive.
Vector softmax(const Vector& u) {
  const double peak = u.maxCoeff();
  Vector row = (u.array() - peak).exp().matrix();
  return row / row.sum();
}

}  // namespace

void McmcConfig::validate() const {
  if (iterations < 1) {
    throw ValidationError("iterations must be >= 1");
  }
  if (thin < 1) {
    throw ValidationError("thin must be >= 1");
  }
  if (starts < 1) {
    throw ValidationError("starts must be >= 1");
  }
  if (!(adapt_fraction >= 0.0 && adapt_fraction <= 1.0)) {
    throw ValidationError("adapt_fraction must lie in [0, 1]");
  }
  for (double s :
       {steps.gamma_row, steps.gamma_tail, steps.p_logit, steps.mu, steps.sigma_logchol}) {
    if (!(s >= 0.0) || !std::isfinite(s)) {
      throw ValidationError("step sizes must be finite and non-negative");
    }
  }
}

std::size_t tail_count(const HmmParams& params, std::size_t k) {
  return static_cast<std::size_t>(
      (params.gamma().row(static_cast<Eigen::Index>(k)).array() < kTailThreshold).count());
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

double inv_logit(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

std::vector<Block> sweep_blocks(std::size_t K) {
  std::vector<Block> blocks;
  blocks.reserve(5 * K);
  for (std::size_t k = 0; k < K; ++k) {
    blocks.push_back({BlockKind::gamma_row, k});
    blocks.push_back({BlockKind::gamma_tail, k});
    blocks.push_back({BlockKind::p, k});
    blocks.push_back({BlockKind::mu, k});
    blocks.push_back({BlockKind::sigma, k});
  }
  return blocks;
}

double log_jacobian(const HmmParams& params, Block block) {
  switch (block.kind) {
    case BlockKind::gamma_row:
    case BlockKind::gamma_tail:
      // Softmax from the sum-zero subspace: density factor prod_j gamma_j up to a constant.
      return params.gamma().row(static_cast<Eigen::Index>(block.state)).array().log().sum();
    case BlockKind::p: {
      const double p = params.state(block.state).p();
      return std::log(p) + std::log1p(-p);
    }
    case BlockKind::mu: return 0.0;
    case BlockKind::sigma: {
      // (log a, b, log c) -> Sigma = L L^T with L = [[a, 0], [b, c]]: |J| = 4 a^3 c^2.
      const Eigen::Matrix2d& L = params.state(block.state).chol();
      return 2.0 * std::numbers::ln2 + 3.0 * std::log(L(0, 0)) + 2.0 * std::log(L(1, 1));
    }
  }
  return 0.0;
}

Proposal propose_block(const HmmParams& current, Block block, double step, DeltaMode delta_mode,
                       std::mt19937_64& rng) {
  if (step == 0.0) {
    return {current, 0.0};
  }
  std::normal_distribution<double> noise(0.0, step);
  const std::size_t k = block.state;

  // Log probability of the reverse selection minus the forward one (tail moves).
  double selection = 0.0;

  auto with_row = [&](const Vector& row) -> HmmParams {
    Matrix gamma = current.gamma();
    gamma.row(static_cast<Eigen::Index>(k)) = row.transpose();
    if (delta_mode == DeltaMode::stationary) {
      return HmmParams::with_delta_mode(std::move(gamma), current.states(), delta_mode);
    }
    return HmmParams(std::move(gamma), current.delta(), current.states());
  };

  auto build = [&]() -> HmmParams {
    switch (block.kind) {
      case BlockKind::gamma_row: {
        const auto K = static_cast<Eigen::Index>(current.K());
        Vector u = current.gamma().row(static_cast<Eigen::Index>(k)).transpose().array().log();
        Vector eps(K);
        for (Eigen::Index j = 0; j < K; ++j) {
          eps(j) = noise(rng);
        }
        u += eps - Vector::Constant(K, eps.mean());
        return with_row(softmax(u));
      }
      case BlockKind::gamma_tail: {
        const Vector row = current.gamma().row(static_cast<Eigen::Index>(k)).transpose();
        std::vector<Eigen::Index> tail;
        for (Eigen::Index j = 0; j < row.size(); ++j) {
          if (row(j) < kTailThreshold) {
            tail.push_back(j);
          }
        }
        if (tail.empty()) {
          return current;
        }
        std::uniform_int_distribution<std::size_t> pick(0, tail.size() - 1);
        const Eigen::Index j = tail[pick(rng)];
        Vector u = row.array().log();
        u(j) += noise(rng);
        const Vector next = softmax(u);
        const auto next_tail = (next.array() < kTailThreshold).count();
        selection = next(j) < kTailThreshold
                        ? std::log(static_cast<double>(tail.size())) -
                              std::log(static_cast<double>(next_tail))
                        : kNegInf;
        return with_row(next);
      }
      case BlockKind::p: {
        const StateEmission& em = current.state(k);
        const double p = inv_logit(logit(em.p()) + noise(rng));
        return HmmParams(current.gamma(), current.delta(),
                         replace_state(current, k, StateEmission(p, em.mu(), em.sigma())));
      }
      case BlockKind::mu: {
        const StateEmission& em = current.state(k);
        const double dx = noise(rng);
        const double dy = noise(rng);
        const Point mu = em.mu() + Point(dx, dy);
        return HmmParams(current.gamma(), current.delta(),
                         replace_state(current, k, StateEmission(em.p(), mu, em.sigma())));
      }
      case BlockKind::sigma: {
        const StateEmission& em = current.state(k);
        const Eigen::Matrix2d& L = em.chol();
        const double la = std::log(L(0, 0)) + noise(rng);
        const double b = L(1, 0) + noise(rng);
        const double lc = std::log(L(1, 1)) + noise(rng);
        const double a = std::exp(la);
        const double c = std::exp(lc);
        Eigen::Matrix2d sigma;
        sigma << a * a, a * b, a * b, b * b + c * c;
        return HmmParams(current.gamma(), current.delta(),
                         replace_state(current, k, StateEmission(em.p(), em.mu(), sigma)));
      }
    }
    return current;
  };

  HmmParams proposed = build();
  if (selection == kNegInf) {
    return {std::move(proposed), kNegInf};
  }
  const double ratio = log_jacobian(proposed, block) - log_jacobian(current, block) + selection;
  return {std::move(proposed), ratio};
}

Proposal propose(const HmmParams& current, const StepSizes& steps, DeltaMode delta_mode,
                 std::mt19937_64& rng) {
  Proposal out{current, 0.0};
  for (const Block& b : sweep_blocks(current.K())) {
    Proposal next = propose_block(out.params, b, block_step(steps, b.kind), delta_mode, rng);
    out.log_ratio += next.log_ratio;
    out.params = std::move(next.params);
  }
  return out;
}

double acceptance_probability(double log_target_current, double log_target_proposed,
                              double log_proposal_ratio) {
  const double log_alpha = log_target_proposed - log_target_current + log_proposal_ratio;
  if (std::isnan(log_alpha)) {
    return 0.0;
  }
  return log_alpha >= 0.0 ? 1.0 : std::exp(log_alpha);
}

bool mh_accept(double log_target_current, double log_target_proposed, double log_proposal_ratio,
               std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double draw = u(rng);
  return draw < acceptance_probability(log_target_current, log_target_proposed,
                                       log_proposal_ratio);
}

LikelihoodBackend LikelihoodBackend::serial() {
  return {[](const HmmParams& p, const EmissionTable& t) {
    return forward_loglik(p.gamma(), p.delta(), t);
  }};
}

LikelihoodBackend LikelihoodBackend::parallel(const EngineConfig& cfg) {
  cfg.validate();
  return {[cfg](const HmmParams& p, const EmissionTable& t) {
    return parallel_loglik(p.gamma(), p.delta(), t, cfg);
  }};
}

double log_posterior(const HmmParams& params, const PriorSpec& spec,
                     std::span<const Observation> obs, const LikelihoodBackend& backend) {
  const double lp = log_prior(params, spec);
  if (!std::isfinite(lp)) {
    return kNegInf;
  }
  return lp + backend.loglik(params, emission_table(params, obs));
}

namespace {

// One chain: current state, cached emissions, tuned steps and its rows.
struct Chain {
  std::optional<HmmParams> params;
  EmissionTable table;
  double lprior = kNegInf;
  double llik = kNegInf;
  std::vector<double> steps;
  std::vector<std::size_t> window_accepts;
  std::vector<std::size_t> window_attempts;
  std::vector<TraceRow> rows;
  std::size_t proposed = 0;
  std::size_t accepted = 0;

  void record(std::size_t it) {
    rows.push_back({it, llik + lprior, llik, lprior, flatten(*params)});
  }
};

class Sampler {
 public:
  Sampler(std::span<const Observation> obs, std::size_t K, const PriorSpec& spec,
          const McmcConfig& cfg, const LikelihoodBackend& backend)
      : obs_(obs),
        K_(K),
        spec_(spec),
        cfg_(cfg),
        backend_(backend),
        rng_(cfg.seed),
        blocks_(sweep_blocks(K)),
        saved_column_(static_cast<Eigen::Index>(obs.size())) {}

  // Initial state from the prior, redrawn while its posterior is -inf.
  Chain start() {
    Chain c;
    for (std::size_t attempt = 0; attempt < kMaxInitialDraws && !c.params; ++attempt) {
      try {
        HmmParams draw = sample_prior(K_, spec_, cfg_.delta_mode, rng_);
        const double lp = log_prior(draw, spec_);
        if (!std::isfinite(lp)) {
          continue;
        }
        EmissionTable t = cfg_.prior_only ? EmissionTable() : emission_table(draw, obs_);
        const double ll = loglik(draw, t);
        if (!std::isfinite(ll)) {
          continue;
        }
        c.params.emplace(std::move(draw));
        c.table = std::move(t);
        c.lprior = lp;
        c.llik = ll;
      } catch (const NumericalError&) {
      }
    }
    if (!c.params) {
      throw NumericalError("no prior draw with finite posterior after 1000 attempts");
    }
    for (const Block& b : blocks_) {
      c.steps.push_back(block_step(cfg_.steps, b.kind));
    }
    c.window_accepts.assign(blocks_.size(), 0);
    c.window_attempts.assign(blocks_.size(), 0);
    c.record(0);
    return c;
  }

  // Iterations [from, to): one sweep each, recording every thin-th.
  void advance(Chain& c, std::size_t from, std::size_t to, std::size_t adapt_until) {
    for (std::size_t it = from; it < to; ++it) {
      const bool adapting = it <= adapt_until;
      for (std::size_t b = 0; b < blocks_.size(); ++b) {
        step_block(c, b, adapting);
      }
      if (adapting && it % kAdaptWindow == 0) {
        retune(c);
      }
      if (it % cfg_.thin == 0) {
        c.record(it);
      }
    }
  }

 private:
  double loglik(const HmmParams& p, const EmissionTable& t) const {
    if (cfg_.prior_only) {
      return 0.0;
    }
    try {
      return backend_.loglik(p, t);
    } catch (const NumericalError&) {
      return kNegInf;
    }
  }

  void step_block(Chain& c, std::size_t b, bool adapting) {
    const Block block = blocks_[b];
    if (block.kind == BlockKind::gamma_tail && tail_count(*c.params, block.state) == 0) {
      return;
    }
    ++c.window_attempts[b];
    if (!adapting) {
      ++c.proposed;
    }
    std::optional<Proposal> prop;
    try {
      prop.emplace(propose_block(*c.params, block, c.steps[b], cfg_.delta_mode, rng_));
    } catch (const NumericalError&) {
      return;
    } catch (const ValidationError&) {
      return;
    }
    if (prop->log_ratio == kNegInf) {
      return;
    }
    const double lp_new = log_prior(prop->params, spec_);
    if (!std::isfinite(lp_new)) {
      return;
    }
    const bool emission = touches_emission(block.kind) && !cfg_.prior_only;
    const auto col = static_cast<Eigen::Index>(block.state);
    if (emission) {
      saved_column_ = c.table.col(col);
      emission_column(prop->params.state(block.state), obs_, c.table, block.state);
    }
    const double ll_new = loglik(prop->params, c.table);
    if (mh_accept(c.llik + c.lprior, ll_new + lp_new, prop->log_ratio, rng_)) {
      c.params.emplace(std::move(prop->params));
      c.llik = ll_new;
      c.lprior = lp_new;
      ++c.window_accepts[b];
      if (!adapting) {
        ++c.accepted;
      }
    } else if (emission) {
      c.table.col(col) = saved_column_;
    }
  }

  void retune(Chain& c) const {
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      if (c.steps[b] == 0.0 || c.window_attempts[b] == 0) {
        continue;
      }
      const double rate =
          static_cast<double>(c.window_accepts[b]) / static_cast<double>(c.window_attempts[b]);
      // Steps inherited from burn-in can be orders of magnitude off, so react
      // strongly, but at most 4x per window.
      const double factor = std::clamp(std::exp(4.0 * (rate - kTargetAcceptance)), 0.25, 4.0);
      c.steps[b] = std::clamp(c.steps[b] * factor, 1e-8, max_step(blocks_[b].kind));
      c.window_accepts[b] = 0;
      c.window_attempts[b] = 0;
    }
  }

  std::span<const Observation> obs_;
  std::size_t K_;
  const PriorSpec& spec_;
  const McmcConfig& cfg_;
  const LikelihoodBackend& backend_;
  std::mt19937_64 rng_;
  std::vector<Block> blocks_;
  Vector saved_column_;
};

}  // namespace

Trace run_chain(std::span<const Observation> obs, std::size_t K, const PriorSpec& spec,
                const McmcConfig& cfg, const LikelihoodBackend& backend) {
  cfg.validate();
  spec.validate();
  if (!cfg.prior_only && obs.empty()) {
    throw ValidationError("no observations");
  }
  Sampler sampler(obs, K, spec, cfg, backend);
  const auto adapt_until = std::min(
      cfg.iterations - 1,
      static_cast<std::size_t>(cfg.adapt_fraction * static_cast<double>(cfg.iterations)));

  // Every start runs the tuning phase; the best fit continues.
  std::optional<Chain> best;
  for (std::size_t s = 0; s < cfg.starts; ++s) {
    Chain c = sampler.start();
    sampler.advance(c, 1, adapt_until + 1, adapt_until);
    if (!best || c.llik > best->llik) {
      best = std::move(c);
    }
  }
  sampler.advance(*best, adapt_until + 1, cfg.iterations, adapt_until);

  Trace trace;
  trace.K = K;
  trace.rows = std::move(best->rows);
  trace.proposed = best->proposed;
  trace.accepted = best->accepted;
  return trace;
}

}  // namespace zihmm
