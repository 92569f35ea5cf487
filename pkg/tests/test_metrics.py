from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ladder_budget.core import mean_allocation, validate_profile
from ladder_budget.errors import KOutOfRange, LengthMismatch, MTooSmall
from ladder_budget.metrics import (
    fairness_report,
    im_asymptotic_deficit,
    l1_bound_from_funding_bounds,
    ladder_bounds,
    ladder_l1_bound,
    overfund_lower_bound,
    overfund_upper_bound,
    underfund_lower_bound,
    underfund_upper_bound,
)
from ladder_budget.phantoms import independent_markets_system, ladder_system
from ladder_budget.verify import gen_underfund_instance

from oracles import grid_rows


def test_report_on_overfund_example():
    rep = fairness_report((F(1, 2), F(1, 2), 0), (F(3, 4), F(1, 4), 0))
    assert rep.per_project_deviation == (F(-1, 4), F(1, 4), 0)
    assert (rep.overfund, rep.underfund, rep.linf, rep.l1) == (F(1, 4), F(1, 4), F(1, 4), F(1, 2))


def test_report_identity():
    rep = fairness_report((F(1, 3),) * 3, (F(1, 3),) * 3)
    assert (rep.overfund, rep.underfund, rep.l1) == (0, 0, 0)


@pytest.mark.parametrize("m", [2, 3, 7])
def test_report_on_uniform_against_underfund_mean(m):
    mean = mean_allocation(gen_underfund_instance(4, m))
    rep = fairness_report((F(1, m),) * m, mean)
    assert rep.underfund == F(1, 2) - F(1, 2 * m)


def test_report_length_mismatch():
    with pytest.raises(LengthMismatch):
        fairness_report((F(1),), (F(1, 2), F(1, 2)))


@given(grid_rows(max_n=5, max_m=5, max_q=10), grid_rows(n=1, max_m=5, max_q=10))
def test_l1_is_twice_positive_part(rows, alloc_rows):
    mean = mean_allocation(validate_profile(rows))
    alloc = alloc_rows[0]
    if len(alloc) != len(mean):
        alloc = mean.values
    rep = fairness_report(alloc, mean)
    pos = sum((d for d in rep.per_project_deviation if d > 0), F(0))
    assert rep.l1 == 2 * pos
    assert rep.linf == max(rep.overfund, rep.underfund)


@pytest.mark.parametrize("n, expected", [(4, F(1, 4)), (3, F(2, 9)), (1, 0), (10, F(1, 4))])
def test_overfund_upper(n, expected):
    assert overfund_upper_bound(n) == expected


@pytest.mark.parametrize("m, expected", [(3, F(1, 3)), (1, 0), (10, F(9, 20))])
def test_underfund_upper(m, expected):
    assert underfund_upper_bound(m) == expected


@pytest.mark.parametrize("n, expected", [(4, F(1, 4)), (3, F(1, 6)), (1, 0)])
def test_overfund_lower(n, expected):
    assert overfund_lower_bound(n) == expected


@pytest.mark.parametrize("n, m, expected", [(2, 3, F(1, 3)), (6, 3, F(1, 3)), (3, 3, F(2, 9)), (5, 1, 0), (4, 1, 0)])
def test_underfund_lower(n, m, expected):
    assert underfund_lower_bound(n, m) == expected


def test_im_deficit_examples():
    eps = F(1, 1000)
    for n in (2, 5, 9):
        want = F(n - 1, n) - eps * F(n - 1, n)
        assert im_asymptotic_deficit(n, 1, eps, independent_markets_system(n)) == want
    assert im_asymptotic_deficit(3, 0, 1, ladder_system(3)) == 0
    assert im_asymptotic_deficit(4, 1, F(1, 2), independent_markets_system(4)) == F(3, 8)
    with pytest.raises(KOutOfRange):
        im_asymptotic_deficit(4, 3, F(1, 2), independent_markets_system(4))


@pytest.mark.parametrize(
    "beta, gamma, m, expected",
    [(F(1, 4), F(1, 3), 3, F(2, 3)), (0, F(1, 3), 5, 0), (F(1, 4), F(3, 8), 4, F(1))],
)
def test_l1_composition(beta, gamma, m, expected):
    assert l1_bound_from_funding_bounds(beta, gamma, m) == expected


def test_l1_composition_needs_two_projects():
    with pytest.raises(MTooSmall):
        l1_bound_from_funding_bounds(F(1, 4), 0, 1)


@pytest.mark.parametrize(
    "m, expected", [(3, F(2, 3)), (4, F(1)), (5, F(3, 2)), (6, F(5, 3)), (7, F(2)), (20, F(2))]
)
def test_ladder_l1_table(m, expected):
    assert ladder_l1_bound(m) == expected
    composed = l1_bound_from_funding_bounds(overfund_upper_bound(2), underfund_upper_bound(m), m)
    assert ladder_l1_bound(m) == min(2, composed)


def test_bound_ordering():
    for n in range(1, 51):
        assert overfund_lower_bound(n) <= overfund_upper_bound(n)
        for m in range(1, 51):
            assert underfund_lower_bound(n, m) <= underfund_upper_bound(m)


def test_ladder_bounds_bundle():
    assert ladder_bounds(3, 3) == {"overfund": F(2, 9), "underfund": F(1, 3), "l1": F(2, 3)}


@given(st.integers(1, 60))
def test_odd_upper_bound_below_quarter(n):
    assert overfund_upper_bound(n) <= F(1, 4)
