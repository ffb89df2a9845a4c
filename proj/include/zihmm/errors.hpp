#pragma once

#include <stdexcept>
#include <string>

namespace zihmm {

/// Bad input: invalid parameters, malformed files, violated preconditions.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical or runtime failure on otherwise valid input (likelihood collapse,
/// non-convergence, chain initialisation failure).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace zihmm
