import numpy as np
import pytest
from fractions import Fraction as F

from ladder_budget import kernels
from ladder_budget.core import validate_profile
from ladder_budget.phantoms import ladder_system
from ladder_budget.solver import solve, solve_generic
from ladder_budget.verify import ints_to_profile, sample_votes


def _batch(n, m, grid, count, seed, sampler="uniform-simplex"):
    rng = np.random.default_rng(seed)
    D = int(np.lcm(n, grid))
    votes = np.stack([sample_votes(rng, n, m, sampler, grid) for _ in range(count)]) * (D // grid)
    return votes, D


@pytest.mark.parametrize("n, m, grid", [(1, 3, 5), (2, 2, 4), (3, 4, 10), (5, 3, 12), (8, 6, 60)])
@pytest.mark.parametrize("sampler", ["uniform-simplex", "single-minded-mix", "grid"])
def test_backends_agree_with_fraction_solver(backend, n, m, grid, sampler):
    votes, D = _batch(n, m, grid, 40, seed=n * 100 + m, sampler=sampler)
    out = kernels.ladder_batch(votes, D)
    assert np.array_equal(out.alloc.sum(axis=1), out.den)
    for b in range(len(votes)):
        p = ints_to_profile(votes[b], D)
        ref = solve_generic(ladder_system(n), p)
        den = int(out.den[b])
        assert F(int(out.t_lo[b]), den) == ref.t_star
        assert F(int(out.t_hi[b]), den) == ref.normalization_interval[1]
        assert tuple(F(int(a), den) for a in out.alloc[b]) == ref.allocation.values


def test_numba_and_numpy_identical():
    if kernels.numba is None:
        pytest.skip("numba missing")
    votes, D = _batch(6, 5, 30, 500, seed=3)
    prev = kernels.get_backend()
    try:
        kernels.set_backend("numba")
        a = kernels.ladder_batch(votes, D)
        kernels.set_backend("numpy")
        b = kernels.ladder_batch(votes, D)
    finally:
        kernels.set_backend(prev)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


def test_worked_example_through_kernel(backend):
    p = validate_profile([["0", "0.2", "0.8"], ["1", "0", "0"], ["0", "1", "0"], ["0.55", "0.45", "0"]])
    res = solve(ladder_system(4), p)
    assert res.t_star == F(11, 12)
    assert res.allocation.values == (F(5, 12), F(5, 12), F(1, 6))


def test_deviation_numerators_match_fractions(backend):
    votes, D = _batch(4, 3, 8, 30, seed=11)
    out = kernels.ladder_batch(votes, D)
    dev, den = kernels.deviation_numerators(out, votes, D)
    for b in range(len(votes)):
        alloc = [F(int(a), int(out.den[b])) for a in out.alloc[b]]
        mean = [F(int(c), 4 * D) for c in votes[b].sum(axis=0)]
        assert [F(int(d), int(den[b])) for d in dev[b]] == [a - c for a, c in zip(alloc, mean)]


def test_profile_to_ints():
    arr, D = kernels.profile_to_ints(((F(1, 3), F(2, 3)), (F(1, 2), F(1, 2))), 2)
    assert D == 6
    assert arr.tolist() == [[2, 4], [3, 3]]


def test_input_checks():
    with pytest.raises(ValueError):
        kernels.ladder_batch(np.zeros((2, 2)), 2)
    with pytest.raises(ValueError):
        kernels.ladder_batch(np.array([[[1, 0], [0, 1]]]), 3)
    with pytest.raises(OverflowError):
        kernels.ladder_batch(np.array([[[2**40, 0], [0, 2**40]]]), 2**40)
    with pytest.raises(ValueError):
        kernels.set_backend("cuda")


def test_env_flag_selects_numpy(monkeypatch):
    monkeypatch.setenv("LADDER_BUDGET_BACKEND", "numpy")
    assert kernels._default_backend() == "numpy"
    monkeypatch.setenv("LADDER_BUDGET_BACKEND", "")
    assert kernels._default_backend() == ("numba" if kernels.numba is not None else "numpy")
