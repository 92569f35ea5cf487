"""Normalization: find the time at which per-project medians sum to one."""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable, Union

from ladder_budget.core import (
    ONE,
    ZERO,
    Allocation,
    Profile,
    mean_allocation,
    median_of,
    parse_ratio,
)
from ladder_budget import kernels
from ladder_budget.errors import BadDimensions, IterationLimit, NoNormalization
from ladder_budget.phantoms import (
    PhantomSystem,
    SystemKind,
    breakpoints_union,
    independent_markets_system,
    ladder_system,
    sequential_lift_system,
    snapshot,
)


class Method(str, Enum):
    EXACT_BREAKPOINT = "exact-breakpoint"
    BISECTION = "bisection"


class Mechanism(str, Enum):
    LADDER = "ladder"
    INDEPENDENT_MARKETS = "independent-markets"
    SEQUENTIAL_LIFT = "sequential-lift"
    MEAN = "mean"

    @classmethod
    def parse(cls, name: Union[str, "Mechanism"]) -> "Mechanism":
        if isinstance(name, Mechanism):
            return name
        key = name.strip().lower().replace("_", "-")
        return cls(key)


@dataclass(frozen=True)
class NormalizationResult:
    t_star: Fraction
    allocation: Allocation
    normalization_interval: tuple[Fraction, Fraction]
    method: Method


def medians_at(system: PhantomSystem, p: Profile, t: Fraction) -> tuple[Fraction, ...]:
    phantoms = snapshot(system, t)
    return tuple(median_of(phantoms + col) for col in zip(*p.votes))


def total_at(system: PhantomSystem, p: Profile, t: Fraction) -> Fraction:
    return sum(medians_at(system, p, t), ZERO)


def candidate_times(system: PhantomSystem, p: Profile) -> list[Fraction]:
    """Breakpoints plus every time a trajectory passes a vote value.

    The total is linear between consecutive candidates.
    """
    times = set(breakpoints_union(system))
    values = {v for row in p.votes for v in row}
    for f in system.trajectories:
        for v in values:
            times.update(f.crossings(v))
    return sorted(times)


def _check_shape(system: PhantomSystem, p: Profile) -> None:
    if system.n != p.n:
        raise BadDimensions(f"phantom system is for n = {system.n}, profile has {p.n} voters")


def solve(system: PhantomSystem, p: Profile) -> NormalizationResult:
    """Exact normalization. Ladder systems go through the integer kernel."""
    _check_shape(system, p)
    if system.kind is SystemKind.LADDER:
        D = kernels.common_scale({v.denominator for row in p.votes for v in row}, p.n)
        if D < 2**24 and kernels.fits_int64(p.n, p.m, D):
            return _solve_ladder_kernel(p)
    return solve_generic(system, p)


def _solve_ladder_kernel(p: Profile) -> NormalizationResult:
    votes, D = kernels.profile_to_ints(p.votes, p.n)
    res = kernels.ladder_batch(votes[None], D)
    den = int(res.den[0])
    t_lo = Fraction(int(res.t_lo[0]), den)
    t_hi = Fraction(int(res.t_hi[0]), den)
    alloc = tuple(Fraction(int(a), den) for a in res.alloc[0])
    return NormalizationResult(t_lo, Allocation(alloc), (t_lo, t_hi), Method.EXACT_BREAKPOINT)


def solve_generic(system: PhantomSystem, p: Profile) -> NormalizationResult:
    """Breakpoint enumeration over exact rationals, valid for any system."""
    _check_shape(system, p)
    cands = candidate_times(system, p)
    memo: dict[int, Fraction] = {}

    def tot(i: int) -> Fraction:
        if i not in memo:
            memo[i] = total_at(system, p, cands[i])
        return memo[i]

    idx = range(len(cands))
    first = bisect.bisect_left(idx, ONE, key=tot)
    if first == len(cands):
        raise NoNormalization(f"total at t = 1 is {tot(len(cands) - 1)} < 1")
    if first == 0:
        t_lo = cands[0]
    else:
        t_lo = _interpolate(cands[first - 1], tot(first - 1), cands[first], tot(first))

    above = bisect.bisect_right(idx, ONE, key=tot)
    if above == len(cands):
        t_hi = ONE
    elif tot(above - 1) == ONE:
        t_hi = cands[above - 1]
    else:
        t_hi = t_lo

    alloc = medians_at(system, p, t_lo)
    if sum(alloc, ZERO) != ONE:
        raise NoNormalization(f"medians at t = {t_lo} sum to {sum(alloc, ZERO)}")
    return NormalizationResult(t_lo, Allocation(alloc), (t_lo, t_hi), Method.EXACT_BREAKPOINT)


def _interpolate(t0: Fraction, y0: Fraction, t1: Fraction, y1: Fraction) -> Fraction:
    return t0 + (ONE - y0) * (t1 - t0) / (y1 - y0)


def solve_bisection(
    system: PhantomSystem,
    p: Profile,
    epsilon: Fraction = Fraction(1, 10**9),
    max_iter: int = 256,
) -> NormalizationResult:
    """Oracle solver: dyadic bisection on the monotone total.

    Keeps ``total(lo) < 1 <= total(hi)`` and stops once the bracket is
    narrower than ``epsilon`` and ``total(hi) - 1 <= epsilon``. The reported
    medians are not renormalized.
    """
    _check_shape(system, p)
    epsilon = parse_ratio(epsilon)
    lo, hi = ZERO, ONE
    total_hi = total_at(system, p, hi)
    if total_hi < ONE:
        raise NoNormalization(f"total at t = 1 is {total_hi} < 1")
    for _ in range(max_iter):
        if hi - lo <= epsilon and total_at(system, p, hi) - ONE <= epsilon:
            break
        mid = (lo + hi) / 2
        if total_at(system, p, mid) < ONE:
            lo = mid
        else:
            hi = mid
    else:
        raise IterationLimit(f"bracket [{lo}, {hi}] did not shrink below {epsilon}")
    alloc = medians_at(system, p, hi)
    return NormalizationResult(hi, Allocation(alloc), (lo, hi), Method.BISECTION)


_BUILDERS: dict[Mechanism, Callable[[int], PhantomSystem]] = {
    Mechanism.LADDER: ladder_system,
    Mechanism.INDEPENDENT_MARKETS: independent_markets_system,
    Mechanism.SEQUENTIAL_LIFT: sequential_lift_system,
}


def system_for(mechanism: Union[str, Mechanism], n: int) -> PhantomSystem:
    mech = Mechanism.parse(mechanism)
    if mech is Mechanism.MEAN:
        raise ValueError("the mean rule has no phantom system")
    return _cached_system(mech, n)


_SYSTEM_CACHE: dict[tuple[Mechanism, int], PhantomSystem] = {}


def _cached_system(mech: Mechanism, n: int) -> PhantomSystem:
    key = (mech, n)
    if key not in _SYSTEM_CACHE:
        _SYSTEM_CACHE[key] = _BUILDERS[mech](n)
    return _SYSTEM_CACHE[key]


def aggregate(mechanism: Union[str, Mechanism], p: Profile) -> Allocation:
    mech = Mechanism.parse(mechanism)
    if mech is Mechanism.MEAN:
        return mean_allocation(p)
    return solve(system_for(mech, p.n), p).allocation
