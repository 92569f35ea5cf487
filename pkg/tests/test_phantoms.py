from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ladder_budget.errors import InvalidPhantomSystem, TOutOfRange
from ladder_budget.phantoms import (
    PiecewiseLinearTrajectory,
    breakpoints_union,
    custom_system,
    independent_markets_system,
    ladder_system,
    sequential_lift_system,
    snapshot,
)

from oracles import PHANTOMS

BUILDERS = {
    "ladder": ladder_system,
    "independent-markets": independent_markets_system,
    "sequential-lift": sequential_lift_system,
}


def test_ladder_at_normalization_time():
    assert snapshot(ladder_system(4), F(11, 12)) == (F(11, 12), F(2, 3), F(5, 12), F(1, 6), F(0))


def test_ladder_at_half():
    assert snapshot(ladder_system(4), F(1, 2)) == (F(1, 2), F(1, 4), 0, 0, 0)


@pytest.mark.parametrize("n", [1, 2, 5, 9])
def test_ladder_top_phantom_is_identity(n):
    f0 = ladder_system(n)[0]
    for t in (F(0), F(1, 7), F(3, 5), F(1)):
        assert f0(t) == t


def test_independent_markets_examples():
    assert snapshot(independent_markets_system(4), 1) == (1, F(3, 4), F(1, 2), F(1, 4), 0)
    assert snapshot(independent_markets_system(2), F(2, 3)) == (F(2, 3), F(1, 3), 0)


@pytest.mark.parametrize(
    "t, expected", [(F(1, 3), (1, 0, 0)), (F(1, 2), (1, F(1, 4), 0)), (F(1), (1, F(1, 2), 0))]
)
def test_sequential_lift_examples(t, expected):
    assert snapshot(sequential_lift_system(2), t) == expected


@pytest.mark.parametrize("name", sorted(BUILDERS))
@pytest.mark.parametrize("n", [1, 3, 6])
def test_everything_starts_at_zero(name, n):
    assert all(v == 0 for v in snapshot(BUILDERS[name](n), 0))


def test_breakpoints_union_examples():
    assert breakpoints_union(ladder_system(4)) == [0, F(1, 4), F(1, 2), F(3, 4), 1]
    assert breakpoints_union(independent_markets_system(7)) == [0, 1]
    assert breakpoints_union(sequential_lift_system(2)) == [0, F(1, 3), F(2, 3), 1]


def test_snapshot_rejects_out_of_range():
    with pytest.raises(TOutOfRange):
        snapshot(ladder_system(2), F(-1, 10))
    with pytest.raises(TOutOfRange):
        snapshot(ladder_system(2), F(11, 10))


@pytest.mark.parametrize("name", sorted(BUILDERS))
@pytest.mark.parametrize("n", [1, 2, 3, 4, 7])
def test_invariants_on_dense_grid(name, n):
    system = BUILDERS[name](n)
    ts = sorted({F(i, 120) for i in range(121)} | set(breakpoints_union(system)))
    prev = None
    for t in ts:
        snap = snapshot(system, t)
        assert snap == tuple(PHANTOMS[name](n, k, t) for k in range(n + 1))
        assert all(0 <= v <= 1 for v in snap)
        assert all(snap[k] >= snap[k + 1] for k in range(n))
        if prev is not None:
            assert all(a <= b for a, b in zip(prev, snap))
        prev = snap
    assert all(v >= 1 - F(k, n) for k, v in enumerate(snapshot(system, 1)))


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8])
def test_ladder_steps_are_at_most_one_over_n(n):
    system = ladder_system(n)
    for i in range(241):
        snap = snapshot(system, F(i, 240))
        assert all(snap[k] - snap[k + 1] <= F(1, n) for k in range(n))
    assert snapshot(system, 1) == tuple(1 - F(k, n) for k in range(n + 1))


@given(st.integers(1, 6), st.fractions(min_value=0, max_value=1, max_denominator=97))
def test_trajectories_match_closed_forms(n, t):
    for name, build in BUILDERS.items():
        assert snapshot(build(n), t) == tuple(PHANTOMS[name](n, k, t) for k in range(n + 1))


def test_reparametrized_lift_has_same_terminal_values():
    fast = sequential_lift_system(3, phase_ends=[F(1, 10), F(1, 5), F(1, 2), F(1)])
    assert snapshot(fast, 1) == snapshot(sequential_lift_system(3), 1)
    assert snapshot(fast, F(1, 10)) == (1, 0, 0, 0)


def test_bad_phase_ends_rejected():
    with pytest.raises(InvalidPhantomSystem):
        sequential_lift_system(2, phase_ends=[F(1, 3), F(2, 3)])
    with pytest.raises(InvalidPhantomSystem):
        sequential_lift_system(2, phase_ends=[F(1, 3), F(2, 3), F(9, 10)])


def test_custom_system_accepts_valid():
    system = custom_system(1, [[(0, 0), (1, 1)], [(0, 0), ("1/2", 0), (1, "1/2")]])
    assert snapshot(system, F(3, 4)) == (F(3, 4), F(1, 4))


@pytest.mark.parametrize(
    "phantoms",
    [
        # phantom order broken
        [[(0, 0), (1, "1/2")], [(0, 0), (1, 1)]],
        # decreasing trajectory
        [[(0, 0), ("1/2", 1), (1, "1/2")], [(0, 0), (1, 0)]],
        # endpoint too low
        [[(0, 0), (1, "1/2")], [(0, 0), (1, 0)]],
        # does not start at zero
        [[(0, "1/10"), (1, 1)], [(0, 0), (1, 0)]],
        # wrong number of phantoms
        [[(0, 0), (1, 1)]],
    ],
)
def test_custom_system_rejects_invalid(phantoms):
    with pytest.raises(InvalidPhantomSystem):
        custom_system(1, phantoms)


def test_trajectory_crossings():
    f = PiecewiseLinearTrajectory.from_points([(0, 0), ("1/2", 0), (1, "1/2")])
    assert f.crossings(F(1, 4)) == [F(3, 4)]
    assert f.times == (0, F(1, 2), 1)
