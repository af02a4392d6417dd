"""Noise-level-aware piecewise-polynomial regression on dyadic grids."""

from ._core import (
    BudgetError,
    DomainError,
    Error,
    EstimateResult,
    PiecewisePoly,
    PreconditionError,
    __version__,
    decompose,
    epsilon,
    estimate,
    grid_points,
    hard_threshold,
    k_star,
    lq_error,
    observe,
    rate_fit,
    run_cli,
    target_names,
)

__all__ = [
    "BudgetError",
    "DomainError",
    "Error",
    "EstimateResult",
    "PiecewisePoly",
    "PreconditionError",
    "__version__",
    "decompose",
    "epsilon",
    "estimate",
    "grid_points",
    "hard_threshold",
    "k_star",
    "lq_error",
    "observe",
    "rate_fit",
    "run_cli",
    "target_names",
]
