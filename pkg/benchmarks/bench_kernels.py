"""Compare the numba and numpy Ladder kernels, and the Fraction solver.

    python benchmarks/bench_kernels.py [--batch 10000] [--repeat 5]
"""

import argparse
import time

import numpy as np

from ladder_budget import kernels
from ladder_budget.phantoms import ladder_system
from ladder_budget.solver import solve_generic
from ladder_budget.verify import ints_to_profile, sample_votes

SHAPES = [(3, 3), (5, 4), (8, 6), (15, 10)]


def make_batch(n, m, batch, grid=60, seed=0):
    rng = np.random.default_rng([seed, n, m])
    scale = int(np.lcm(n, grid))
    votes = np.stack([sample_votes(rng, n, m, "uniform-simplex", grid) for _ in range(batch)])
    return votes * (scale // grid), scale


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--batch", type=int, default=10_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--fraction-sample", type=int, default=200)
    args = ap.parse_args()

    backends = [b for b in kernels.BACKENDS if b != "numba" or kernels.numba is not None]
    print(f"{'n':>3} {'m':>3} " + " ".join(f"{b + ' us/profile':>20}" for b in backends) + f" {'fraction us/profile':>20}")
    for n, m in SHAPES:
        votes, scale = make_batch(n, m, args.batch)
        results, cols = {}, []
        for b in backends:
            kernels.set_backend(b)
            kernels.ladder_batch(votes[:2], scale)  # compile / warm
            cols.append(best_of(lambda: kernels.ladder_batch(votes, scale), args.repeat) / args.batch * 1e6)
            results[b] = kernels.ladder_batch(votes, scale)
        if len(results) == 2:
            assert all(np.array_equal(x, y) for x, y in zip(results["numba"], results["numpy"]))
        system = ladder_system(n)
        profiles = [ints_to_profile(v, scale) for v in votes[: args.fraction_sample]]
        frac = best_of(lambda: [solve_generic(system, p) for p in profiles], 1) / len(profiles) * 1e6
        print(f"{n:>3} {m:>3} " + " ".join(f"{c:>20.2f}" for c in cols) + f" {frac:>20.1f}")


if __name__ == "__main__":
    main()
