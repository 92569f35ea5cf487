"""Deviation from the mean, and the closed-form fairness bounds."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from ladder_budget.core import ZERO
from ladder_budget.errors import KOutOfRange, LengthMismatch, MTooSmall
from ladder_budget.phantoms import PhantomSystem, snapshot

TRIVIAL_L1_CAP = Fraction(2)


@dataclass(frozen=True)
class FairnessReport:
    per_project_deviation: tuple[Fraction, ...]
    overfund: Fraction
    underfund: Fraction
    linf: Fraction
    l1: Fraction


def fairness_report(alloc: Sequence[Fraction], mean: Sequence[Fraction]) -> FairnessReport:
    """Signed deviations ``alloc_j - mean_j`` and their summaries."""
    alloc, mean = tuple(alloc), tuple(mean)
    if len(alloc) != len(mean):
        raise LengthMismatch(f"allocation has {len(alloc)} entries, mean has {len(mean)}")
    dev = tuple(a - b for a, b in zip(alloc, mean))
    over = max((d for d in dev if d > 0), default=ZERO)
    under = max((-d for d in dev if d < 0), default=ZERO)
    l1 = sum((abs(d) for d in dev), ZERO)
    return FairnessReport(dev, over, under, max(over, under), l1)


def overfund_upper_bound(n: int) -> Fraction:
    """Worst overfunding of any proportional moving phantom mechanism."""
    if n % 2 == 0:
        return Fraction(1, 4)
    return Fraction(1, 4) * (1 - Fraction(1, n * n))


def underfund_upper_bound(m: int) -> Fraction:
    """Worst underfunding of the Ladder mechanism; independent of ``n``."""
    return Fraction(1, 2) * (1 - Fraction(1, m))


def overfund_lower_bound(n: int) -> Fraction:
    if n % 2 == 0:
        return Fraction(1, 4)
    return Fraction(1, 4) * (1 - Fraction(1, n))


def underfund_lower_bound(n: int, m: int) -> Fraction:
    base = Fraction(1, 2) * (1 - Fraction(1, m))
    if n % 2 == 0:
        return base
    return base * (1 - Fraction(1, n))


def im_asymptotic_deficit(n: int, k: int, t: Fraction, system: PhantomSystem) -> Fraction:
    """``(n - k)/n - f_k(t)``: underfunding forced as m grows.

    Applies only when ``f_{n-k}(t) > 0``; check that with :func:`snapshot`.
    """
    if not 0 <= k <= n // 2:
        raise KOutOfRange(f"k = {k} must lie in [0, {n // 2}]")
    return Fraction(n - k, n) - snapshot(system, t)[k]


def l1_bound_from_funding_bounds(beta: Fraction, gamma: Fraction, m: int) -> Fraction:
    """Turn per-project over/underfunding bounds into an l1 bound."""
    if m < 2:
        raise MTooSmall(f"m = {m}; need at least two projects")
    beta, gamma = Fraction(beta), Fraction(gamma)
    return 2 * max(min(k * beta, (m - k) * gamma) for k in range(1, m))


def ladder_l1_bound(m: int) -> Fraction:
    """Composed l1 guarantee, capped at the trivial bound 2 (reached from m = 7)."""
    if m < 2:
        return TRIVIAL_L1_CAP
    composed = l1_bound_from_funding_bounds(Fraction(1, 4), underfund_upper_bound(m), m)
    return min(TRIVIAL_L1_CAP, composed)


def ladder_bounds(n: int, m: int) -> dict[str, Fraction]:
    """Theoretical Ladder guarantees for an instance of size ``(n, m)``."""
    return {
        "overfund": overfund_upper_bound(n),
        "underfund": underfund_upper_bound(m),
        "l1": ladder_l1_bound(m),
    }


__all__ = [
    "FairnessReport",
    "fairness_report",
    "im_asymptotic_deficit",
    "l1_bound_from_funding_bounds",
    "ladder_bounds",
    "ladder_l1_bound",
    "overfund_lower_bound",
    "overfund_upper_bound",
    "underfund_lower_bound",
    "underfund_upper_bound",
]
