"""Exception hierarchy shared by all modules."""

from __future__ import annotations

from fractions import Fraction


class BudgetError(Exception):
    """Base class for user-facing input errors."""


class EmptyMatrix(BudgetError):
    def __init__(self) -> None:
        super().__init__("profile must have at least one voter and one project")


class RaggedMatrix(BudgetError):
    def __init__(self, row: int, length: int, expected: int) -> None:
        self.row, self.length, self.expected = row, length, expected
        super().__init__(f"row {row} has {length} entries, expected {expected}")


class RowNotNormalized(BudgetError):
    def __init__(self, row: int, total: Fraction) -> None:
        self.row, self.total = row, total
        super().__init__(f"row {row} sums to {total}, not 1")


class EntryOutOfRange(BudgetError):
    def __init__(self, row: int, col: int, value: Fraction | None = None) -> None:
        self.row, self.col, self.value = row, col, value
        super().__init__(f"entry ({row}, {col}) = {value} lies outside [0, 1]")


class RatioParseError(BudgetError):
    def __init__(self, text: object, row: int | None = None, col: int | None = None) -> None:
        self.text, self.row, self.col = text, row, col
        where = f" at ({row}, {col})" if row is not None else ""
        super().__init__(f"cannot parse {text!r} as an exact rational{where}")


class EvenCardinality(BudgetError):
    def __init__(self, size: int) -> None:
        self.size = size
        super().__init__(f"median needs an odd number of values, got {size}")


class LengthMismatch(BudgetError):
    pass


class TOutOfRange(BudgetError):
    def __init__(self, t: Fraction) -> None:
        self.t = t
        super().__init__(f"time {t} lies outside [0, 1]")


class InvalidPhantomSystem(BudgetError):
    pass


class KOutOfRange(BudgetError):
    pass


class BadDimensions(BudgetError):
    pass


class NNotOdd(BudgetError):
    pass


class MTooSmall(BudgetError):
    pass


class NotAMonotonePair(BudgetError):
    pass


class SearchSpaceTooLarge(BudgetError):
    pass


class NoNormalization(AssertionError):
    """Raised when the medians never sum to one; an internal invariant failure."""


class IterationLimit(RuntimeError):
    """Bisection bracket stopped shrinking (non-monotone total)."""
