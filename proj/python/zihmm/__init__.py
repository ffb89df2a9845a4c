"""Zero-inflated bivariate-Gaussian hidden Markov model.

Observation arrays have shape (N, 2) with columns (lon, lat); a row of NaNs
marks an hour without an event.
"""

from ._core import (
    HmmParams,
    NumericalError,
    ValidationError,
    brute_force_loglik,
    cli,
    effective_sample_size,
    filtered_distribution,
    fit,
    forward_loglik,
    log_prior,
    parallel_loglik,
    simulate,
    stationary_distribution,
)

__all__ = [
    "HmmParams",
    "NumericalError",
    "ValidationError",
    "brute_force_loglik",
    "cli",
    "effective_sample_size",
    "filtered_distribution",
    "fit",
    "forward_loglik",
    "log_prior",
    "parallel_loglik",
    "simulate",
    "stationary_distribution",
]
