"""Command-line front end.

Exit codes: 0 success, 1 bound/axiom failure or internal solver error,
2 input error. All configuration is explicit flags.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from ladder_budget import verify
from ladder_budget.core import Profile, format_ratio, mean_allocation, parse_ratio
from ladder_budget.errors import BudgetError, IterationLimit, NoNormalization
from ladder_budget.metrics import fairness_report, ladder_bounds
from ladder_budget.phantoms import PhantomSystem
from ladder_budget.serialize import (
    certification_csv,
    certification_json,
    dumps,
    load_phantom_system,
    load_profile,
    to_decimal,
    write_csv,
    write_profile,
)
from ladder_budget.solver import Mechanism, NormalizationResult, solve, solve_bisection, system_for

log = logging.getLogger("ladder_budget")

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2

MECHANISMS = [m.value for m in Mechanism]


class InputError(Exception):
    pass


def _fmt(x: Fraction | None) -> str | None:
    return None if x is None else format_ratio(x)


def _range(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition("..")
    try:
        bounds = (int(lo), int(hi if sep else lo))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo..hi, got {text!r}") from None
    if bounds[0] < 1 or bounds[0] > bounds[1]:
        raise argparse.ArgumentTypeError(f"empty or invalid range {text!r}")
    return bounds


def _ratio(text: str) -> Fraction:
    try:
        value = parse_ratio(text)
    except BudgetError:
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from None
    if value <= 0:
        raise argparse.ArgumentTypeError("epsilon must be positive")
    return value


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _run(mechanism: str, p: Profile, phantoms: PhantomSystem | None) -> NormalizationResult | None:
    if phantoms is not None:
        if phantoms.n != p.n:
            raise InputError(f"phantom system has n = {phantoms.n}, profile has {p.n} voters")
        return solve(phantoms, p)
    mech = Mechanism.parse(mechanism)
    if mech is Mechanism.MEAN:
        return None
    return solve(system_for(mech, p.n), p)


# ---------------------------------------------------------------- aggregate


def cmd_aggregate(args) -> int:
    p = load_profile(args.profile)
    phantoms = load_phantom_system(args.phantoms) if args.phantoms else None
    res = _run(args.mechanism, p, phantoms)
    alloc = res.allocation if res is not None else mean_allocation(p)
    name = "custom" if phantoms is not None else args.mechanism
    payload = {
        "mechanism": name,
        "n": p.n,
        "m": p.m,
        "allocation": [format_ratio(a) for a in alloc],
        "allocation_decimal": [to_decimal(a) for a in alloc],
        "t_star": _fmt(res.t_star) if res else None,
        "normalization_interval": [_fmt(t) for t in res.normalization_interval] if res else None,
    }
    if args.epsilon is not None and res is not None:
        system = phantoms if phantoms is not None else system_for(args.mechanism, p.n)
        oracle = solve_bisection(system, p, args.epsilon)
        payload["bisection"] = {
            "epsilon": format_ratio(args.epsilon),
            "t": to_decimal(oracle.t_star),
            "allocation_decimal": [to_decimal(a) for a in oracle.allocation],
            "max_gap": to_decimal(max(abs(a - b) for a, b in zip(oracle.allocation, alloc))),
        }
    _emit_allocation(payload, args.format)
    return EXIT_OK


def _emit_allocation(payload: dict, fmt: str) -> None:
    if fmt == "json":
        sys.stdout.write(dumps(payload))
        return
    t_star = payload["t_star"] or ""
    lo, hi = payload["normalization_interval"] or ("", "")
    if fmt == "csv":
        rows = [
            (j + 1, a, d, t_star, lo, hi)
            for j, (a, d) in enumerate(zip(payload["allocation"], payload["allocation_decimal"]))
        ]
        sys.stdout.write(
            write_csv(rows, ("project", "allocation", "allocation_decimal", "t_star", "interval_lo", "interval_hi"))
        )
        return
    lines = [f"mechanism  {payload['mechanism']}  (n={payload['n']}, m={payload['m']})"]
    if payload["t_star"] is not None:
        lines.append(f"t*         {t_star}   interval [{lo}, {hi}]")
    width = max(len(a) for a in payload["allocation"])
    for j, (a, d) in enumerate(zip(payload["allocation"], payload["allocation_decimal"]), start=1):
        lines.append(f"project {j:<3} {a:>{width}}  {d}")
    sys.stdout.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------- metrics


def cmd_metrics(args) -> int:
    p = load_profile(args.profile)
    phantoms = load_phantom_system(args.phantoms) if args.phantoms else None
    res = _run(args.mechanism, p, phantoms)
    alloc = res.allocation if res is not None else mean_allocation(p)
    rep = fairness_report(alloc, mean_allocation(p))
    bounds = ladder_bounds(p.n, p.m)
    observed = {"overfund": rep.overfund, "underfund": rep.underfund, "l1": rep.l1}
    payload = {
        "mechanism": "custom" if phantoms is not None else args.mechanism,
        "n": p.n,
        "m": p.m,
        "deviation": [format_ratio(d) for d in rep.per_project_deviation],
        "overfund": format_ratio(rep.overfund),
        "underfund": format_ratio(rep.underfund),
        "linf": format_ratio(rep.linf),
        "l1": format_ratio(rep.l1),
        "ladder_bounds": {k: format_ratio(v) for k, v in bounds.items()},
        "flags": {
            k: ("exceeds" if observed[k] > bounds[k] else "tight" if observed[k] == bounds[k] else "within")
            for k in bounds
        },
    }
    if args.format == "json":
        sys.stdout.write(dumps(payload))
    elif args.format == "csv":
        rows = [("deviation_" + str(j + 1), d) for j, d in enumerate(payload["deviation"])]
        rows += [(k, payload[k]) for k in ("overfund", "underfund", "linf", "l1")]
        rows += [(f"bound_{k}", v) for k, v in payload["ladder_bounds"].items()]
        sys.stdout.write(write_csv(rows, ("metric", "value")))
    else:
        out = [f"mechanism  {payload['mechanism']}  (n={p.n}, m={p.m})"]
        out.append("deviation  " + "  ".join(payload["deviation"]))
        for k in ("overfund", "underfund", "l1"):
            out.append(f"{k:<10} {payload[k]:<10} bound {payload['ladder_bounds'][k]:<8} {payload['flags'][k]}")
        out.append(f"{'linf':<10} {payload['linf']}")
        sys.stdout.write("\n".join(out) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------- generate


def cmd_generate(args) -> int:
    fam = args.family
    if fam == "footnote":
        if args.m not in (None, 3):
            raise InputError("the footnote family has m = 3")
        p = verify.gen_footnote_instance(args.n)
        name = f"footnote n={args.n}"
    else:
        if args.m is None:
            raise InputError(f"--m is required for family {fam}")
        if fam == "overfund":
            p = verify.gen_overfund_instance(args.n, args.m)
        elif fam == "underfund":
            p = verify.gen_underfund_instance(args.n, args.m)
        else:
            p = verify.gen_im_instance(args.n, args.m, args.k if args.k is not None else 1)
        name = f"{fam} n={args.n} m={args.m}" + (f" k={args.k if args.k is not None else 1}" if fam == "im" else "")
    write_profile(args.output, p, name)
    return EXIT_OK


# ---------------------------------------------------------------- certify


def cmd_certify(args) -> int:
    report = verify.certify_bounds(
        args.mechanism,
        args.n_range,
        args.m_range,
        args.trials,
        args.seed,
        include_adversarial=not args.no_adversarial,
        jobs=args.jobs,
    )
    out = Path(args.output)
    out.write_text(certification_csv(report), encoding="utf-8")
    sidecar = out.with_suffix(".json")
    sidecar.write_text(dumps(certification_json(report)), encoding="utf-8")
    status = "ok" if report.ok else "BOUND EXCEEDED"
    sys.stderr.write(f"{report.mechanism}: {len(report.cells)} cells, {status}; wrote {out} and {sidecar}\n")
    return EXIT_OK if report.ok else EXIT_FAIL


# ---------------------------------------------------------------- axioms


def _on_grid(p: Profile, q: int) -> bool:
    return all((v * q).denominator == 1 for row in p.votes for v in row)


def cmd_axioms(args) -> int:
    n, m, q = args.n, args.m, args.grid
    if n < 1 or m < 1 or q < 1:
        raise InputError("n, m and grid must be positive")
    mech = args.mechanism
    rng = np.random.default_rng(np.random.SeedSequence([args.seed, n, m]))
    generated = [p for _, p in verify.adversarial_instances(n, m)]
    randoms = [
        verify.ints_to_profile(verify.sample_votes(rng, n, m, "grid", q), q) for _ in range(args.profiles)
    ]
    results: dict[str, dict] = {}
    violations: list[verify.AxiomViolation] = []

    sp_profiles = [p for p in generated if _on_grid(p, q)] + randoms
    found = [v for p in sp_profiles for v in verify.check_strategyproofness(mech, p, q)]
    results["strategyproofness"] = {"checked": len(sp_profiles), "violations": len(found)}
    violations += found

    if m >= 2:
        found = []
        for _ in range(args.pairs):
            p, i0, j0, pp = verify.random_monotone_pair(rng, n, m, q)
            v = verify.check_monotonicity(mech, p, i0, j0, pp)
            if v is not None:
                found.append(v)
        results["monotonicity"] = {"checked": args.pairs, "violations": len(found)}
        violations += found

    if m**n <= verify.PROPORTIONALITY_CAP:
        found = verify.check_proportionality(mech, n, m)
        results["proportionality"] = {"checked": m**n, "exhaustive": True, "violations": len(found)}
    else:
        found = verify.check_proportionality(mech, n, m, sample=args.pairs, seed=args.seed)
        results["proportionality"] = {"checked": args.pairs, "exhaustive": False, "violations": len(found)}
    violations += found

    zu_profiles = generated + randoms
    found = [v for p in zu_profiles if (v := verify.check_zero_unanimity(mech, p)) is not None]
    results["zero-unanimity"] = {"checked": len(zu_profiles), "violations": len(found)}
    violations += found

    payload = {
        "mechanism": mech,
        "n": n,
        "m": m,
        "grid": q,
        "seed": args.seed,
        "results": results,
        "all_passed": not violations,
        "violations": [_violation_doc(v) for v in violations[: args.max_witnesses]],
    }
    sys.stdout.write(dumps(payload))
    return EXIT_OK if not violations else EXIT_FAIL


def _violation_doc(v: verify.AxiomViolation) -> dict:
    doc = {
        "axiom": v.axiom.value,
        "magnitude": format_ratio(v.magnitude),
        "votes": [[format_ratio(x) for x in row] for row in v.profile.votes],
    }
    if v.voter is not None:
        doc["voter"] = v.voter + 1
    if v.project is not None:
        doc["project"] = v.project + 1
    if v.misreport is not None:
        doc["misreport"] = [format_ratio(x) for x in v.misreport]
    if v.other_profile is not None:
        doc["other_votes"] = [[format_ratio(x) for x in row] for row in v.other_profile.votes]
    return doc


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ladder-budget", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def mech_flag(p, default="ladder"):
        p.add_argument("--mechanism", choices=MECHANISMS, default=default)

    p = sub.add_parser("aggregate", help="run a mechanism on a profile document")
    p.add_argument("profile")
    mech_flag(p)
    p.add_argument("--phantoms", help="custom phantom-system JSON (overrides --mechanism)")
    p.add_argument("--format", choices=("json", "csv", "table"), default="json")
    p.add_argument("--epsilon", type=_ratio, help="also run the bisection oracle at this tolerance")
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("metrics", help="deviation from the mean and Ladder bounds")
    p.add_argument("profile")
    mech_flag(p)
    p.add_argument("--phantoms")
    p.add_argument("--format", choices=("json", "csv", "table"), default="json")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("generate", help="write a lower-bound instance")
    p.add_argument("family", choices=("overfund", "underfund", "im", "footnote"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--output", default="-")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("certify", help="sweep random and adversarial profiles against the bounds")
    mech_flag(p)
    p.add_argument("--n-range", type=_range, default=(2, 8))
    p.add_argument("--m-range", type=_range, default=(2, 6))
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--output", required=True, help="CSV path; witnesses go to the .json sidecar")
    p.add_argument("--no-adversarial", action="store_true")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("axioms", help="brute-force axiom checks")
    mech_flag(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--grid", type=int, default=verify.DEFAULT_GRID)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--profiles", type=int, default=5, help="random grid profiles per check")
    p.add_argument("--pairs", type=int, default=1000, help="monotonicity pairs")
    p.add_argument("--max-witnesses", type=int, default=20)
    p.set_defaults(func=cmd_axioms)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (BudgetError, InputError) as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_INPUT
    except (NoNormalization, IterationLimit, AssertionError) as exc:
        sys.stderr.write(f"internal solver failure: {exc}\n")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
