#pragma once

// MCMC traces and their tab-separated on-disk form. The first column is
// `state` (iteration index), followed by posterior, likelihood, prior and one
// column per scalar model parameter.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "zihmm/model.hpp"

namespace zihmm {

struct TraceRow {
  std::size_t iteration = 0;
  double log_posterior = 0.0;
  double log_likelihood = 0.0;
  double log_prior = 0.0;
  std::vector<double> values;
};

struct Trace {
  std::size_t K = 0;
  std::vector<TraceRow> rows;
  std::size_t proposed = 0;  ///< block proposals after adaptation
  std::size_t accepted = 0;

  double acceptance_rate() const {
    return proposed == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposed);
  }
  /// Values of the named column across rows.
  std::vector<double> column(const std::string& name) const;
};

/// Column names of the flattened parameter vector for K states.
std::vector<std::string> parameter_names(std::size_t K);

std::vector<double> flatten(const HmmParams& params);
HmmParams unflatten(std::span<const double> values, std::size_t K);

void write_trace(std::ostream& os, const Trace& trace);
void write_trace(const std::string& path, const Trace& trace);
Trace read_trace(std::istream& is);
Trace read_trace(const std::string& path);

}  // namespace zihmm
