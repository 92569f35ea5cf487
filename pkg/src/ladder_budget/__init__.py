"""Truthful budget aggregation with moving phantom mechanisms.

The central mechanism is the Ladder rule; Independent Markets, Sequential
Lift and the (non-truthful) mean are provided for comparison.
"""

from ladder_budget.core import (
    Allocation,
    Profile,
    Ratio,
    mean_allocation,
    median_of,
    parse_ratio,
    validate_profile,
)
from ladder_budget.phantoms import (
    PhantomSystem,
    PiecewiseLinearTrajectory,
    breakpoints_union,
    custom_system,
    independent_markets_system,
    ladder_system,
    sequential_lift_system,
    snapshot,
)
from ladder_budget.solver import (
    Mechanism,
    NormalizationResult,
    aggregate,
    solve,
    solve_bisection,
    total_at,
)

__all__ = [
    "Allocation",
    "Mechanism",
    "NormalizationResult",
    "PhantomSystem",
    "PiecewiseLinearTrajectory",
    "Profile",
    "Ratio",
    "aggregate",
    "breakpoints_union",
    "custom_system",
    "independent_markets_system",
    "ladder_system",
    "mean_allocation",
    "median_of",
    "parse_ratio",
    "sequential_lift_system",
    "snapshot",
    "solve",
    "solve_bisection",
    "total_at",
    "validate_profile",
]

__version__ = "0.1.0"
