"""Phantom systems as exact piecewise-linear trajectories."""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from ladder_budget.core import ONE, ZERO, parse_ratio
from ladder_budget.errors import InvalidPhantomSystem, TOutOfRange


class SystemKind(str, Enum):
    LADDER = "ladder"
    INDEPENDENT_MARKETS = "independent-markets"
    SEQUENTIAL_LIFT = "sequential-lift"
    CUSTOM = "custom"


@dataclass(frozen=True)
class PiecewiseLinearTrajectory:
    """Breakpoints ``(t, value)`` with linear interpolation in between.

    Must start at ``(0, 0)``, end at ``t = 1``, have strictly increasing
    times and non-decreasing values inside ``[0, 1]``.
    """

    breakpoints: tuple[tuple[Fraction, Fraction], ...]

    def __post_init__(self) -> None:
        pts = self.breakpoints
        if len(pts) < 2:
            raise InvalidPhantomSystem("a trajectory needs at least two breakpoints")
        if pts[0] != (ZERO, ZERO):
            raise InvalidPhantomSystem(f"trajectory must start at (0, 0), got {pts[0]}")
        if pts[-1][0] != ONE:
            raise InvalidPhantomSystem("trajectory must end at t = 1")
        for (t0, y0), (t1, y1) in zip(pts, pts[1:]):
            if not t0 < t1:
                raise InvalidPhantomSystem("breakpoint times must strictly increase")
            if y1 < y0:
                raise InvalidPhantomSystem("trajectory values must be non-decreasing")
        if pts[-1][1] > ONE:
            raise InvalidPhantomSystem("trajectory values must lie in [0, 1]")

    @classmethod
    def from_points(cls, points: Iterable[tuple[object, object]]) -> "PiecewiseLinearTrajectory":
        pts: list[tuple[Fraction, Fraction]] = []
        for t, y in points:
            t, y = parse_ratio(t), parse_ratio(y)
            # collinear interior points carry no information; keep the shape minimal
            if len(pts) >= 2:
                (ta, ya), (tb, yb) = pts[-2], pts[-1]
                if (yb - ya) * (t - tb) == (y - yb) * (tb - ta):
                    pts[-1] = (t, y)
                    continue
            pts.append((t, y))
        return cls(tuple(pts))

    @property
    def times(self) -> tuple[Fraction, ...]:
        return tuple(t for t, _ in self.breakpoints)

    def segments(self) -> Iterable[tuple[Fraction, Fraction, Fraction, Fraction]]:
        pts = self.breakpoints
        for (t0, y0), (t1, y1) in zip(pts, pts[1:]):
            yield t0, y0, t1, y1

    def __call__(self, t: Fraction) -> Fraction:
        pts = self.breakpoints
        idx = bisect.bisect_right(pts, (t, ONE + 1)) - 1
        if idx >= len(pts) - 1:
            return pts[-1][1]
        t0, y0 = pts[idx]
        t1, y1 = pts[idx + 1]
        if y0 == y1:
            return y0
        return y0 + (y1 - y0) * (t - t0) / (t1 - t0)

    def crossings(self, value: Fraction) -> list[Fraction]:
        """Times at which the trajectory reaches ``value`` on a rising segment."""
        out = []
        for t0, y0, t1, y1 in self.segments():
            if y0 < y1 and y0 <= value <= y1:
                out.append(t0 + (value - y0) * (t1 - t0) / (y1 - y0))
        return out


@dataclass(frozen=True)
class PhantomSystem:
    """``n + 1`` ordered trajectories ``f_0 >= f_1 >= ... >= f_n``."""

    n: int
    kind: SystemKind
    trajectories: tuple[PiecewiseLinearTrajectory, ...]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise InvalidPhantomSystem("n must be at least 1")
        if len(self.trajectories) != self.n + 1:
            raise InvalidPhantomSystem(
                f"expected {self.n + 1} trajectories, got {len(self.trajectories)}"
            )
        # differences are linear between union breakpoints, so checking there suffices
        grid = _union_times(self.trajectories)
        for t in grid:
            vals = [f(t) for f in self.trajectories]
            for k in range(self.n):
                if vals[k] < vals[k + 1]:
                    raise InvalidPhantomSystem(f"f_{k}({t}) < f_{k + 1}({t})")
        for k, f in enumerate(self.trajectories):
            if f(ONE) < ONE - Fraction(k, self.n):
                raise InvalidPhantomSystem(f"f_{k}(1) = {f(ONE)} is below 1 - {k}/{self.n}")

    def __getitem__(self, k: int) -> PiecewiseLinearTrajectory:
        return self.trajectories[k]

    def __len__(self) -> int:
        return len(self.trajectories)


def _union_times(trajectories: Sequence[PiecewiseLinearTrajectory]) -> list[Fraction]:
    times: set[Fraction] = set()
    for f in trajectories:
        times.update(f.times)
    return sorted(times)


def ladder_system(n: int) -> PhantomSystem:
    """``f_k(t) = max(t - k/n, 0)``."""
    trajs = []
    for k in range(n + 1):
        start = Fraction(k, n)
        if k == 0:
            pts = [(ZERO, ZERO), (ONE, ONE)]
        elif k == n:
            pts = [(ZERO, ZERO), (ONE, ZERO)]
        else:
            pts = [(ZERO, ZERO), (start, ZERO), (ONE, ONE - start)]
        trajs.append(PiecewiseLinearTrajectory(tuple(pts)))
    return PhantomSystem(n, SystemKind.LADDER, tuple(trajs))


def independent_markets_system(n: int) -> PhantomSystem:
    """``f_k(t) = t (n - k) / n``."""
    trajs = tuple(
        PiecewiseLinearTrajectory(((ZERO, ZERO), (ONE, Fraction(n - k, n))))
        for k in range(n + 1)
    )
    return PhantomSystem(n, SystemKind.INDEPENDENT_MARKETS, trajs)


def sequential_lift_system(
    n: int, phase_ends: Sequence[Fraction] | None = None
) -> PhantomSystem:
    """Raise ``f_0`` to 1, then ``f_1`` to ``1 - 1/n``, and so on, one at a time.

    By default phase ``k`` occupies ``[k/(n+1), (k+1)/(n+1)]``. ``phase_ends``
    gives the (strictly increasing) end time of each phase instead, the last
    one being 1; any such choice defines the same mechanism.
    """
    if phase_ends is None:
        ends = [Fraction(k + 1, n + 1) for k in range(n + 1)]
    else:
        ends = [parse_ratio(x) for x in phase_ends]
        if len(ends) != n + 1 or ends[-1] != ONE:
            raise InvalidPhantomSystem("need n + 1 phase ends finishing at 1")
    starts = [ZERO] + ends[:-1]
    trajs = []
    for k in range(n + 1):
        final = ONE - Fraction(k, n)
        pts = [(ZERO, ZERO)]
        if starts[k] > ZERO:
            pts.append((starts[k], ZERO))
        pts.append((ends[k], final))
        if ends[k] < ONE:
            pts.append((ONE, final))
        trajs.append(PiecewiseLinearTrajectory.from_points(pts))
    return PhantomSystem(n, SystemKind.SEQUENTIAL_LIFT, tuple(trajs))


def custom_system(n: int, phantoms: Sequence[Sequence[tuple[object, object]]]) -> PhantomSystem:
    trajs = tuple(PiecewiseLinearTrajectory.from_points(p) for p in phantoms)
    return PhantomSystem(n, SystemKind.CUSTOM, trajs)


def snapshot(system: PhantomSystem, t: Fraction) -> tuple[Fraction, ...]:
    t = parse_ratio(t)
    if not ZERO <= t <= ONE:
        raise TOutOfRange(t)
    return tuple(f(t) for f in system.trajectories)


def breakpoints_union(system: PhantomSystem) -> list[Fraction]:
    """All slope-change times of any trajectory, including 0 and 1."""
    return _union_times(system.trajectories)


SYSTEM_BUILDERS: dict[SystemKind, Callable[[int], PhantomSystem]] = {
    SystemKind.LADDER: ladder_system,
    SystemKind.INDEPENDENT_MARKETS: independent_markets_system,
    SystemKind.SEQUENTIAL_LIFT: sequential_lift_system,
}
