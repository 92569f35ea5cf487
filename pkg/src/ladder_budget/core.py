"""Exact domain types: ratios, profiles, allocations, and the median."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Iterator, Sequence

from ladder_budget.errors import (
    EmptyMatrix,
    EntryOutOfRange,
    EvenCardinality,
    RaggedMatrix,
    RatioParseError,
    RowNotNormalized,
)

Ratio = Fraction

ZERO = Fraction(0)
ONE = Fraction(1)


def parse_ratio(value: object) -> Fraction:
    """Convert a literal to an exact rational.

    Accepts ints, ``Fraction``s, strings such as ``"5/12"`` or ``"0.55"``
    and floats. Floats go through their shortest repr, so ``0.55`` becomes
    ``11/20`` rather than the binary approximation.
    """
    if isinstance(value, bool):
        raise RatioParseError(value)
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, float):
        value = repr(value)
    if isinstance(value, str):
        text = value.strip()
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError):
            raise RatioParseError(value) from None
    raise RatioParseError(value)


def format_ratio(value: Fraction) -> str:
    """Serialize as ``"p/q"``, or ``"p"`` when the denominator is 1."""
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class Allocation:
    """A length-m budget division.

    Construction does not check normalization because the bisection oracle
    reports raw medians; use :func:`validate_allocation` where it matters.
    """

    values: tuple[Fraction, ...]

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self) -> Iterator[Fraction]:
        return iter(self.values)

    def __getitem__(self, j: int) -> Fraction:
        return self.values[j]

    @property
    def m(self) -> int:
        return len(self.values)

    def total(self) -> Fraction:
        return sum(self.values, ZERO)

    def is_normalized(self) -> bool:
        return all(ZERO <= v <= ONE for v in self.values) and self.total() == ONE


def validate_allocation(values: Iterable[object], row: int = 0) -> Allocation:
    vals = tuple(parse_ratio(v) for v in values)
    if not vals:
        raise EmptyMatrix()
    for j, v in enumerate(vals):
        if not ZERO <= v <= ONE:
            raise EntryOutOfRange(row, j, v)
    total = sum(vals, ZERO)
    if total != ONE:
        raise RowNotNormalized(row, total)
    return Allocation(vals)


@dataclass(frozen=True)
class Profile:
    """n voters by m projects; every row is a point of the simplex."""

    votes: tuple[tuple[Fraction, ...], ...]

    @property
    def n(self) -> int:
        return len(self.votes)

    @property
    def m(self) -> int:
        return len(self.votes[0])

    def column(self, j: int) -> tuple[Fraction, ...]:
        return tuple(row[j] for row in self.votes)

    def row(self, i: int) -> Allocation:
        return Allocation(self.votes[i])

    def replace_row(self, i: int, new_row: Sequence[Fraction]) -> "Profile":
        rows = list(self.votes)
        rows[i] = tuple(new_row)
        return Profile(tuple(rows))

    def __iter__(self) -> Iterator[tuple[Fraction, ...]]:
        return iter(self.votes)


def validate_profile(raw: Sequence[Sequence[object]]) -> Profile:
    """Parse and check a raw matrix. Row indices in errors are 1-based."""
    rows = [list(r) for r in raw]
    if not rows or not rows[0]:
        raise EmptyMatrix()
    m = len(rows[0])
    parsed: list[tuple[Fraction, ...]] = []
    for i, r in enumerate(rows, start=1):
        if len(r) != m:
            raise RaggedMatrix(i, len(r), m)
        vals = []
        for j, x in enumerate(r, start=1):
            try:
                v = parse_ratio(x)
            except RatioParseError:
                raise RatioParseError(x, i, j) from None
            if not ZERO <= v <= ONE:
                raise EntryOutOfRange(i, j, v)
            vals.append(v)
        total = sum(vals, ZERO)
        if total != ONE:
            raise RowNotNormalized(i, total)
        parsed.append(tuple(vals))
    return Profile(tuple(parsed))


def mean_allocation(p: Profile) -> Allocation:
    n = p.n
    return Allocation(tuple(sum(col, ZERO) / n for col in zip(*p.votes)))


def median_of(values: Iterable[Fraction]) -> Fraction:
    """Positional middle element of an odd-sized multiset."""
    ordered = sorted(values)
    if len(ordered) % 2 == 0:
        raise EvenCardinality(len(ordered))
    return ordered[len(ordered) // 2]


def l1_distance(a: Iterable[Fraction], b: Iterable[Fraction]) -> Fraction:
    return sum((abs(x - y) for x, y in zip(a, b, strict=True)), ZERO)
