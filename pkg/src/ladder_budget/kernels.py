"""Exact integer kernels for the Ladder mechanism.

Votes are scaled by a common denominator ``D`` (a multiple of ``n``) so that
every vote, every Ladder phantom ``max(T - k D/n, 0)`` and every time at
which a phantom meets a vote is an integer. The total of medians is therefore
linear between consecutive integers, and a bisection over ``T`` in ``[0, D]``
followed by one interpolation gives the normalization point exactly.

Two interchangeable backends exist: numba-compiled loops and vectorized
numpy. ``LADDER_BUDGET_BACKEND=numpy`` forces the numpy path; otherwise numba
is used when importable. Both return bit-identical results.
"""

from __future__ import annotations

import math
import os
from typing import NamedTuple

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba ships with the test env
    numba = None

_INT64_SAFE = 2**62

BACKENDS = ("numba", "numpy")


def _default_backend() -> str:
    requested = os.environ.get("LADDER_BUDGET_BACKEND", "").strip().lower()
    if requested == "numpy" or numba is None:
        return "numpy"
    return "numba"


_backend = _default_backend()


def get_backend() -> str:
    return _backend


def set_backend(name: str) -> None:
    global _backend
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}; choose from {BACKENDS}")
    if name == "numba" and numba is None:
        raise RuntimeError("numba is not installed")
    _backend = name


class LadderBatch(NamedTuple):
    """Integer solution for a batch of profiles sharing ``D``.

    ``t_lo/t_hi`` (times) and ``alloc`` (medians) are numerators over the
    per-profile denominator ``den``; the normalization point is the minimum
    ``t_lo / den`` and ``alloc.sum(axis=1) == den``.
    """

    t_lo: np.ndarray
    t_hi: np.ndarray
    alloc: np.ndarray
    den: np.ndarray


def fits_int64(n: int, m: int, scale: int, extra: int = 1) -> bool:
    """Conservative check that intermediate products stay below 2**62."""
    return (m + 1) * (n + 1) * scale * scale * extra < _INT64_SAFE


# ---------------------------------------------------------------- numpy path


def _np_medians(votes: np.ndarray, T: np.ndarray, step: int) -> np.ndarray:
    """Per-project medians at integer times ``T`` (one per profile)."""
    B, n, m = votes.shape
    ks = np.arange(n + 1, dtype=np.int64) * step
    ph = np.maximum(T[:, None] - ks[None, :], 0)
    stacked = np.concatenate([votes, np.broadcast_to(ph[:, :, None], (B, n + 1, m))], axis=1)
    return np.partition(stacked, n, axis=1)[:, n, :]


def _np_search(votes, D, step, strict):
    """Smallest integer time whose total is ``>= D`` (or ``> D`` if strict)."""
    B = votes.shape[0]
    lo = np.zeros(B, dtype=np.int64)
    hi = np.full(B, D + 1, dtype=np.int64)
    while True:
        active = lo < hi
        if not active.any():
            return lo
        mid = (lo + hi) // 2
        tot = _np_medians(votes, np.minimum(mid, D), step).sum(axis=1)
        ok = tot > D if strict else tot >= D
        hi = np.where(active & ok, mid, hi)
        lo = np.where(active & ~ok, mid + 1, lo)


def _ladder_batch_numpy(votes: np.ndarray, D: int) -> LadderBatch:
    step = D // votes.shape[1]
    Tb = _np_search(votes, D, step, strict=False)
    if np.any(Tb == 0) or np.any(Tb > D):
        raise AssertionError("ladder total failed to bracket 1")
    Ta = Tb - 1
    ma = _np_medians(votes, Ta, step)
    mb = _np_medians(votes, Tb, step)
    ta, tb = ma.sum(axis=1), mb.sum(axis=1)
    delta = tb - ta
    gap = D - ta
    den = delta * D
    t_lo = Ta * delta + gap
    alloc = ma * delta[:, None] + (mb - ma) * gap[:, None]

    above = _np_search(votes, D, step, strict=True)
    prev = above - 1
    tot_prev = _np_medians(votes, np.minimum(prev, D), step).sum(axis=1)
    t_hi = np.where(above > D, den, np.where(tot_prev == D, prev * delta, t_lo))
    return LadderBatch(t_lo, t_hi, alloc, den)


# ---------------------------------------------------------------- numba path

if numba is not None:

    @numba.njit(cache=True)
    def _nb_total_and_medians(cols, T, step, out):
        # cols[j] holds column j sorted ascending; phantoms ascend as k falls,
        # so the median is element n of a two-way merge
        m, n = cols.shape
        total = 0
        for j in range(m):
            i = 0
            k = n
            med = 0
            for _ in range(n + 1):
                ph = T - k * step
                if ph < 0:
                    ph = 0
                if k >= 0 and (i >= n or ph <= cols[j, i]):
                    med = ph
                    k -= 1
                else:
                    med = cols[j, i]
                    i += 1
            out[j] = med
            total += med
        return total

    @numba.njit(cache=True)
    def _nb_first_time(cols, D, step, out, strict):
        lo, hi = 0, D + 1
        while lo < hi:
            mid = (lo + hi) // 2
            tot = _nb_total_and_medians(cols, mid, step, out)
            if tot > D or (not strict and tot == D):
                hi = mid
            else:
                lo = mid + 1
        return lo

    @numba.njit(cache=True)
    def _nb_solve_one(votes, D, step, cols, ma, mb, alloc_row):
        n, m = votes.shape
        for j in range(m):
            cols[j] = np.sort(votes[:, j])
        Tb = _nb_first_time(cols, D, step, ma, False)
        Ta = Tb - 1
        ta = _nb_total_and_medians(cols, Ta, step, ma)
        tb = _nb_total_and_medians(cols, Tb, step, mb)
        delta = tb - ta
        gap = D - ta
        den = delta * D
        t_lo = Ta * delta + gap
        for j in range(m):
            alloc_row[j] = ma[j] * delta + (mb[j] - ma[j]) * gap

        above = _nb_first_time(cols, D, step, ma, True)
        if above > D:
            t_hi = den
        elif _nb_total_and_medians(cols, above - 1, step, ma) == D:
            t_hi = (above - 1) * delta
        else:
            t_hi = t_lo
        return t_lo, t_hi, den

    @numba.njit(cache=True)
    def _ladder_batch_numba_impl(votes, D):
        B, n, m = votes.shape
        step = D // n
        t_lo = np.empty(B, dtype=np.int64)
        t_hi = np.empty(B, dtype=np.int64)
        den = np.empty(B, dtype=np.int64)
        alloc = np.empty((B, m), dtype=np.int64)
        cols = np.empty((m, n), dtype=np.int64)
        ma = np.empty(m, dtype=np.int64)
        mb = np.empty(m, dtype=np.int64)
        for b in range(B):
            lo, hi, d = _nb_solve_one(votes[b], D, step, cols, ma, mb, alloc[b])
            t_lo[b] = lo
            t_hi[b] = hi
            den[b] = d
        return t_lo, t_hi, alloc, den


def ladder_batch(votes: np.ndarray, D: int) -> LadderBatch:
    """Solve the Ladder mechanism for ``B`` profiles given as ``(B, n, m)`` ints.

    Entries are vote numerators over ``D``; ``D`` must be a multiple of ``n``
    and each row must sum to ``D``.
    """
    votes = np.ascontiguousarray(votes, dtype=np.int64)
    if votes.ndim != 3:
        raise ValueError("votes must have shape (B, n, m)")
    B, n, m = votes.shape
    if D % n:
        raise ValueError(f"scale {D} is not a multiple of n = {n}")
    if not fits_int64(n, m, D):
        raise OverflowError(f"scale {D} too large for int64 kernels")
    if _backend == "numba":
        return LadderBatch(*_ladder_batch_numba_impl(votes, np.int64(D)))
    return _ladder_batch_numpy(votes, D)


def deviation_numerators(batch: LadderBatch, votes: np.ndarray, D: int):
    """Exact signed deviations from the mean, as numerators over ``den * n``.

    Allocation ``alloc / den`` and mean ``colsum / (n D)`` share the
    denominator ``den * n`` because ``den`` is a multiple of ``D``.
    """
    n = votes.shape[1]
    colsum = votes.sum(axis=1)
    factor = batch.den // D
    return batch.alloc * n - colsum * factor[:, None], batch.den * n


def common_scale(denominators, n: int) -> int:
    return math.lcm(n, *denominators)


def profile_to_ints(votes, n: int) -> tuple[np.ndarray, int]:
    """Scale a Fraction matrix to integer numerators over a common ``D``."""
    D = common_scale({v.denominator for row in votes for v in row}, n)
    arr = np.array([[v.numerator * (D // v.denominator) for v in row] for row in votes], dtype=np.int64)
    return arr, D
