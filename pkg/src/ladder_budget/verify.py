"""Adversarial instances, random profiles, axiom checkers and bound sweeps."""

from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Iterable, Optional, Union

import numpy as np

from ladder_budget import kernels
from ladder_budget.core import ONE, ZERO, Allocation, Profile, l1_distance, mean_allocation
from ladder_budget.errors import (
    BadDimensions,
    KOutOfRange,
    NNotOdd,
    NotAMonotonePair,
    SearchSpaceTooLarge,
)
from ladder_budget.metrics import fairness_report, ladder_bounds
from ladder_budget.solver import Mechanism, aggregate

log = logging.getLogger(__name__)

MechanismLike = Union[str, Mechanism, Callable[[Profile], Allocation]]

DEFAULT_GRID = 8
PROPORTIONALITY_CAP = 10**5


def resolve(mechanism: MechanismLike) -> Callable[[Profile], Allocation]:
    if callable(mechanism) and not isinstance(mechanism, (str, Mechanism)):
        return mechanism
    mech = Mechanism.parse(mechanism)
    return lambda p: aggregate(mech, p)


def _is_ladder(mechanism: MechanismLike) -> bool:
    try:
        return Mechanism.parse(mechanism) is Mechanism.LADDER  # type: ignore[arg-type]
    except (ValueError, AttributeError):
        return False


def mechanism_name(mechanism: MechanismLike) -> str:
    if isinstance(mechanism, (str, Mechanism)):
        return Mechanism.parse(mechanism).value
    return getattr(mechanism, "__name__", repr(mechanism))


# ---------------------------------------------------------------- instances


def _unit(m: int, j: int = 0) -> tuple[Fraction, ...]:
    return tuple(ONE if c == j else ZERO for c in range(m))


def gen_overfund_instance(n: int, m: int) -> Profile:
    """Half the voters on project 1, the rest split evenly over projects 1 and 2."""
    if n < 2 or m < 2:
        raise BadDimensions(f"need n >= 2 and m >= 2, got n={n}, m={m}")
    half = (Fraction(1, 2), Fraction(1, 2)) + (ZERO,) * (m - 2)
    return Profile(tuple(_unit(m) if i < n // 2 else half for i in range(n)))


def gen_underfund_instance(n: int, m: int) -> Profile:
    if n < 2 or m < 1:
        raise BadDimensions(f"need n >= 2 and m >= 1, got n={n}, m={m}")
    uniform = (Fraction(1, m),) * m
    return Profile(tuple(_unit(m) if i < n // 2 else uniform for i in range(n)))


def gen_im_instance(n: int, m: int, k: int) -> Profile:
    """``n - k`` voters on project 1, ``k`` voters spread over the others."""
    if n < 1 or m < 2:
        raise BadDimensions(f"need n >= 1 and m >= 2, got n={n}, m={m}")
    if not 0 <= k <= n // 2:
        raise KOutOfRange(f"k = {k} must lie in [0, {n // 2}]")
    rest = (ZERO,) + (Fraction(1, m - 1),) * (m - 1)
    return Profile(tuple(_unit(m) if i < n - k else rest for i in range(n)))


def gen_footnote_instance(n: int) -> Profile:
    if n < 3 or n % 2 == 0:
        raise NNotOdd(f"n must be odd and at least 3, got {n}")
    split = (ZERO, Fraction(1, 2), Fraction(1, 2))
    return Profile(tuple(_unit(3) if i < n // 2 else split for i in range(n)))


def adversarial_instances(n: int, m: int) -> list[tuple[str, Profile]]:
    out: list[tuple[str, Profile]] = []
    if n >= 2 and m >= 2:
        out.append(("overfund", gen_overfund_instance(n, m)))
    if n >= 2:
        out.append(("underfund", gen_underfund_instance(n, m)))
    if m >= 2:
        for k in range(n // 2 + 1):
            out.append((f"im-k{k}", gen_im_instance(n, m, k)))
    if m == 3 and n >= 3 and n % 2 == 1:
        out.append(("footnote", gen_footnote_instance(n)))
    return out


# ---------------------------------------------------------------- sampling


def compositions(m: int, q: int) -> Iterable[tuple[int, ...]]:
    """Nonnegative integer vectors of length ``m`` summing to ``q``, lexicographic."""
    if m == 1:
        yield (q,)
        return
    for first in range(q, -1, -1):
        for rest in compositions(m - 1, q - first):
            yield (first,) + rest


def simplex_grid(m: int, q: int) -> list[Allocation]:
    return [Allocation(tuple(Fraction(c, q) for c in comp)) for comp in compositions(m, q)]


SAMPLERS = ("uniform-simplex", "single-minded-mix", "grid")


def _round_to_grid(x: np.ndarray, q: int) -> np.ndarray:
    """Largest-remainder rounding of simplex rows to integers summing to ``q``."""
    scaled = x * q
    base = np.floor(scaled).astype(np.int64)
    short = q - base.sum(axis=-1)
    order = np.argsort(-(scaled - base), axis=-1, kind="stable")
    ranks = np.argsort(order, axis=-1, kind="stable")
    return base + (ranks < short[..., None])


def sample_votes(
    rng: np.random.Generator,
    rows: int,
    m: int,
    sampler: str = "uniform-simplex",
    grid: int = 100,
    mix: float = 0.5,
) -> np.ndarray:
    """``rows`` simplex points as integer numerators over ``grid``."""
    if sampler == "uniform-simplex":
        return _round_to_grid(rng.dirichlet(np.ones(m), size=rows), grid)
    if sampler == "single-minded-mix":
        dense = _round_to_grid(rng.dirichlet(np.ones(m), size=rows), grid)
        picks = rng.integers(0, m, size=rows)
        single = np.zeros((rows, m), dtype=np.int64)
        single[np.arange(rows), picks] = grid
        chosen = rng.random(rows) < mix
        return np.where(chosen[:, None], single, dense)
    if sampler == "grid":
        if m == 1:
            return np.full((rows, 1), grid, dtype=np.int64)
        slots = grid + m - 1
        keys = rng.random((rows, slots))
        bars = np.sort(np.argsort(keys, axis=1)[:, : m - 1], axis=1)
        edges = np.concatenate(
            [np.full((rows, 1), -1), bars, np.full((rows, 1), slots)], axis=1
        )
        return np.diff(edges, axis=1) - 1
    raise ValueError(f"unknown sampler {sampler!r}; choose from {SAMPLERS}")


def ints_to_profile(votes: np.ndarray, scale: int) -> Profile:
    return Profile(tuple(tuple(Fraction(int(v), scale) for v in row) for row in votes))


def random_profile(
    n: int,
    m: int,
    seed: int,
    sampler: str = "uniform-simplex",
    grid: int = 100,
    mix: float = 0.5,
) -> Profile:
    """Deterministic random profile whose entries lie on the ``1/grid`` lattice."""
    if n < 1 or m < 1 or grid < 1:
        raise BadDimensions(f"bad dimensions n={n}, m={m}, grid={grid}")
    rng = np.random.default_rng(np.uint64(seed % 2**64))
    return ints_to_profile(sample_votes(rng, n, m, sampler, grid, mix), grid)


def random_monotone_pair(
    rng: np.random.Generator, n: int, m: int, grid: int = 12
) -> tuple[Profile, int, int, Profile]:
    """A profile and a copy where one voter moves mass onto one project."""
    if m < 2:
        raise BadDimensions("monotone pairs need at least two projects")
    while True:
        votes = sample_votes(rng, n, m, "grid", grid)
        i0 = int(rng.integers(n))
        j0 = int(rng.integers(m))
        row = votes[i0].copy()
        if row[j0] == grid:
            continue
        taken = np.array(
            [0 if j == j0 else int(rng.integers(0, row[j] + 1)) for j in range(m)]
        )
        if taken.sum() == 0:
            donors = [j for j in range(m) if j != j0 and row[j] > 0]
            taken[donors[int(rng.integers(len(donors)))]] = 1
        new = row - taken
        new[j0] += taken.sum()
        moved = votes.copy()
        moved[i0] = new
        return ints_to_profile(votes, grid), i0, j0, ints_to_profile(moved, grid)


# ---------------------------------------------------------------- axioms


class Axiom(str, Enum):
    STRATEGYPROOFNESS = "strategyproofness"
    MONOTONICITY = "monotonicity"
    PROPORTIONALITY = "proportionality"
    ZERO_UNANIMITY = "zero-unanimity"


@dataclass(frozen=True)
class AxiomViolation:
    axiom: Axiom
    profile: Profile
    magnitude: Fraction
    voter: Optional[int] = None
    project: Optional[int] = None
    misreport: Optional[tuple[Fraction, ...]] = None
    other_profile: Optional[Profile] = None


def check_strategyproofness(
    mechanism: MechanismLike, p: Profile, q: int = DEFAULT_GRID
) -> list[AxiomViolation]:
    """Brute-force every grid misreport of every voter.

    A violation is a misreport that brings the outcome strictly closer (l1)
    to the voter's true row; ``magnitude`` is the distance gained.
    """
    run = resolve(mechanism)
    truthful = run(p)
    grid = simplex_grid(p.m, q)
    found = []
    for i in range(p.n):
        true_row = p.votes[i]
        honest = l1_distance(true_row, truthful)
        for r in grid:
            if r.values == true_row:
                continue
            lie = l1_distance(true_row, run(p.replace_row(i, r.values)))
            if lie < honest:
                found.append(
                    AxiomViolation(Axiom.STRATEGYPROOFNESS, p, honest - lie, voter=i, misreport=r.values)
                )
    return found


def _validate_monotone_pair(p: Profile, i0: int, j0: int, p_prime: Profile) -> None:
    if p.n != p_prime.n or p.m != p_prime.m:
        raise NotAMonotonePair("profiles differ in shape")
    for i in range(p.n):
        if i != i0 and p.votes[i] != p_prime.votes[i]:
            raise NotAMonotonePair(f"voter {i} differs but is not i0 = {i0}")
    before, after = p.votes[i0], p_prime.votes[i0]
    if not after[j0] > before[j0]:
        raise NotAMonotonePair(f"voter {i0} does not raise project {j0}")
    for j in range(p.m):
        if j != j0 and after[j] > before[j]:
            raise NotAMonotonePair(f"voter {i0} raises project {j} besides {j0}")


def check_monotonicity(
    mechanism: MechanismLike, p: Profile, i0: int, j0: int, p_prime: Profile
) -> Optional[AxiomViolation]:
    _validate_monotone_pair(p, i0, j0, p_prime)
    run = resolve(mechanism)
    a, b = run(p)[j0], run(p_prime)[j0]
    if a > b:
        return AxiomViolation(
            Axiom.MONOTONICITY, p, a - b, voter=i0, project=j0, other_profile=p_prime
        )
    return None


def single_minded_profiles(n: int, m: int) -> Iterable[Profile]:
    units = [_unit(m, j) for j in range(m)]
    for choice in itertools.product(range(m), repeat=n):
        yield Profile(tuple(units[j] for j in choice))


def check_proportionality(
    mechanism: MechanismLike,
    n: int,
    m: int,
    cap: int = PROPORTIONALITY_CAP,
    sample: Optional[int] = None,
    seed: int = 0,
) -> list[AxiomViolation]:
    """Compare the mechanism with the mean on single-minded profiles.

    Exhaustive while ``m**n <= cap``. Beyond that a seeded random subset of
    ``sample`` profiles is checked if requested, otherwise SearchSpaceTooLarge.
    """
    space = m**n
    if space > cap:
        if sample is None:
            raise SearchSpaceTooLarge(f"{m}^{n} = {space} single-minded profiles exceed cap {cap}")
        log.warning("proportionality: %d of %d profiles sampled (seed %d)", sample, space, seed)
        rng = np.random.default_rng(seed)
        choices = rng.integers(0, m, size=(sample, n))
    else:
        choices = np.array(list(itertools.product(range(m), repeat=n)), dtype=np.int64).reshape(-1, n)

    if _is_ladder(mechanism):
        return _ladder_proportionality(choices, n, m)
    run = resolve(mechanism)
    units = [_unit(m, j) for j in range(m)]
    found = []
    for choice in choices:
        p = Profile(tuple(units[int(j)] for j in choice))
        out = run(p)
        gap = fairness_report(out, mean_allocation(p)).l1
        if gap:
            found.append(AxiomViolation(Axiom.PROPORTIONALITY, p, gap))
    return found


def _ladder_proportionality(choices: np.ndarray, n: int, m: int) -> list[AxiomViolation]:
    found = []
    for start in range(0, len(choices), 4096):
        chunk = choices[start : start + 4096]
        votes = np.zeros((len(chunk), n, m), dtype=np.int64)
        votes[np.arange(len(chunk))[:, None], np.arange(n)[None, :], chunk] = n
        dev, _ = kernels.deviation_numerators(kernels.ladder_batch(votes, n), votes, n)
        for b in np.flatnonzero(np.abs(dev).sum(axis=1)):
            p = ints_to_profile(votes[b], n)
            found.append(AxiomViolation(Axiom.PROPORTIONALITY, p, fairness_report(
                aggregate(Mechanism.LADDER, p), mean_allocation(p)).l1))
    return found


def check_zero_unanimity(mechanism: MechanismLike, p: Profile) -> Optional[AxiomViolation]:
    zero_cols = [j for j in range(p.m) if all(v == ZERO for v in p.column(j))]
    if not zero_cols:
        return None
    out = resolve(mechanism)(p)
    for j in zero_cols:
        if out[j] > ZERO:
            return AxiomViolation(Axiom.ZERO_UNANIMITY, p, out[j], project=j)
    return None


def recheck(violation: AxiomViolation, mechanism: MechanismLike, q: int = DEFAULT_GRID) -> bool:
    """Re-derive a violation from its witness alone."""
    p = violation.profile
    run = resolve(mechanism)
    if violation.axiom is Axiom.STRATEGYPROOFNESS:
        i, r = violation.voter, violation.misreport
        true_row = p.votes[i]
        return l1_distance(true_row, run(p.replace_row(i, r))) < l1_distance(true_row, run(p))
    if violation.axiom is Axiom.MONOTONICITY:
        return check_monotonicity(mechanism, p, violation.voter, violation.project, violation.other_profile) is not None
    if violation.axiom is Axiom.PROPORTIONALITY:
        return run(p).values != mean_allocation(p).values
    return check_zero_unanimity(mechanism, p) is not None


# ---------------------------------------------------------------- certification


@dataclass
class Witness:
    label: str
    profile: Profile
    value: Fraction


@dataclass
class CellReport:
    n: int
    m: int
    trials: int
    adversarial: int
    max_overfund: Fraction
    max_underfund: Fraction
    max_l1: Fraction
    bound_overfund: Fraction
    bound_underfund: Fraction
    bound_l1: Fraction
    witnesses: dict[str, Witness]

    @property
    def witness_id(self) -> str:
        return f"n{self.n}-m{self.m}"

    def exceeded(self) -> list[str]:
        out = []
        if self.max_overfund > self.bound_overfund:
            out.append("overfund")
        if self.max_underfund > self.bound_underfund:
            out.append("underfund")
        if self.max_l1 > self.bound_l1:
            out.append("l1")
        return out


@dataclass
class CertificationReport:
    mechanism: str
    n_range: tuple[int, int]
    m_range: tuple[int, int]
    trials: int
    seed: int
    cells: list[CellReport] = field(default_factory=list)

    @property
    def enforced(self) -> bool:
        return self.mechanism == Mechanism.LADDER.value

    def failures(self) -> list[tuple[int, int, str]]:
        if not self.enforced:
            return []
        return [(c.n, c.m, what) for c in self.cells for what in c.exceeded()]

    @property
    def ok(self) -> bool:
        return not self.failures()


class _Tracker:
    def __init__(self) -> None:
        self.best = {"overfund": (ZERO, None, None), "underfund": (ZERO, None, None), "l1": (ZERO, None, None)}

    def offer(self, key: str, value: Fraction, label: str, profile_fn) -> None:
        if self.best[key][1] is None or value > self.best[key][0]:
            self.best[key] = (value, label, profile_fn)

    def witnesses(self) -> dict[str, Witness]:
        out = {}
        for key, (value, label, fn) in self.best.items():
            if label is not None:
                out[key] = Witness(label, fn(), value)
        return out


SWEEP_SAMPLERS = (("uniform-simplex", 60), ("single-minded-mix", 12), ("grid", 6))


def _certify_cell(args) -> CellReport:
    mechanism, n, m, trials, entropy, include_adversarial = args
    rng = np.random.default_rng(np.random.SeedSequence(entropy))
    tracker = _Tracker()
    run = resolve(mechanism)

    def consider(label: str, p: Profile, alloc: Allocation) -> None:
        rep = fairness_report(alloc, mean_allocation(p))
        tracker.offer("overfund", rep.overfund, label, lambda: p)
        tracker.offer("underfund", rep.underfund, label, lambda: p)
        tracker.offer("l1", rep.l1, label, lambda: p)

    if include_adversarial:
        for label, p in adversarial_instances(n, m):
            consider(label, p, run(p))

    shares = [trials // len(SWEEP_SAMPLERS)] * len(SWEEP_SAMPLERS)
    shares[0] += trials - sum(shares)
    for (sampler, grid), count in zip(SWEEP_SAMPLERS, shares):
        if count == 0:
            continue
        votes = sample_votes(rng, count * n, m, sampler, grid).reshape(count, n, m)
        if _is_ladder(mechanism) and kernels.fits_int64(n, m, math.lcm(grid, n)):
            _sweep_ladder(votes, grid, sampler, tracker)
            continue
        for b in range(count):
            p = ints_to_profile(votes[b], grid)
            consider(f"{sampler}#{b}", p, run(p))

    bounds = ladder_bounds(n, m)
    best = tracker.best
    return CellReport(
        n, m, trials, len(adversarial_instances(n, m)) if include_adversarial else 0,
        best["overfund"][0], best["underfund"][0], best["l1"][0],
        bounds["overfund"], bounds["underfund"], bounds["l1"],
        tracker.witnesses(),
    )


def _sweep_ladder(votes: np.ndarray, grid: int, sampler: str, tracker: _Tracker) -> None:
    count, n, m = votes.shape
    D = math.lcm(grid, n)
    scaled = votes * (D // grid)
    dev, den = kernels.deviation_numerators(kernels.ladder_batch(scaled, D), scaled, D)
    stats = {
        "overfund": np.maximum(dev, 0).max(axis=1),
        "underfund": np.maximum(-dev, 0).max(axis=1),
        "l1": np.abs(dev).sum(axis=1),
    }
    for key, nums in stats.items():
        # float preselect, exact decision among near-ties
        approx = nums / den
        top = approx.max()
        for b in np.flatnonzero(approx >= top - 1e-9):
            b = int(b)
            value = Fraction(int(nums[b]), int(den[b]))
            tracker.offer(key, value, f"{sampler}#{b}", lambda b=b: ints_to_profile(votes[b], grid))


def certify_bounds(
    mechanism: MechanismLike,
    n_range: tuple[int, int],
    m_range: tuple[int, int],
    trials: int,
    seed: int,
    include_adversarial: bool = True,
    jobs: int = 1,
) -> CertificationReport:
    """Sweep random and adversarial profiles, recording exact worst deviations.

    Each ``(n, m)`` cell draws from its own stream seeded by ``(seed, cell
    index)``, so results do not depend on ``jobs``.
    """
    name = mechanism_name(mechanism)
    mech_arg = Mechanism.parse(mechanism) if isinstance(mechanism, (str, Mechanism)) else mechanism
    cells = [(n, m) for n in range(n_range[0], n_range[1] + 1) for m in range(m_range[0], m_range[1] + 1)]
    if not cells:
        raise BadDimensions("empty n or m range")
    tasks = [
        (mech_arg, n, m, trials, [seed % 2**64, idx], include_adversarial)
        for idx, (n, m) in enumerate(cells)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_certify_cell, tasks))
    else:
        results = [_certify_cell(t) for t in tasks]
    report = CertificationReport(name, tuple(n_range), tuple(m_range), trials, seed, results)
    for n, m, what in report.failures():
        log.error("bound exceeded: %s %s at n=%d m=%d", name, what, n, m)
    return report


__all__ = [
    "Axiom",
    "AxiomViolation",
    "CellReport",
    "CertificationReport",
    "adversarial_instances",
    "certify_bounds",
    "check_monotonicity",
    "check_proportionality",
    "check_strategyproofness",
    "check_zero_unanimity",
    "gen_footnote_instance",
    "gen_im_instance",
    "gen_overfund_instance",
    "gen_underfund_instance",
    "ints_to_profile",
    "random_monotone_pair",
    "random_profile",
    "recheck",
    "sample_votes",
    "simplex_grid",
    "single_minded_profiles",
]
