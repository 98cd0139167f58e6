"""Optimal exponential-utility strategies for Gaussian markets with delayed information."""

from ._core import (
    ConditioningError,
    DelayMap,
    InvalidPerturbation,
    MarketSpec,
    OptimalSolution,
    PathEnsemble,
    PreparedMarket,
    SpectrumViolation,
    TimeGrid,
    UtilityEstimate,
    covariance_matrix,
    estimate_utility,
    evaluate_strategy,
    log_rn_derivative,
    mean_vector,
    oracle,
    prepare_market,
    sample_paths,
    scale_strategy,
    solve,
    solve_config,
)

__all__ = [
    "ConditioningError",
    "DelayMap",
    "InvalidPerturbation",
    "MarketSpec",
    "OptimalSolution",
    "PathEnsemble",
    "PreparedMarket",
    "SpectrumViolation",
    "TimeGrid",
    "UtilityEstimate",
    "covariance_matrix",
    "estimate_utility",
    "evaluate_strategy",
    "log_rn_derivative",
    "mean_vector",
    "oracle",
    "prepare_market",
    "sample_paths",
    "scale_strategy",
    "solve",
    "solve_config",
]
