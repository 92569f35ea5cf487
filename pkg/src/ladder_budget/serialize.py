"""Profile documents, phantom-system files and report serialization.

Rationals always travel as ``"p/q"`` strings; decimals appear only as
separate, clearly approximate fields.
"""

from __future__ import annotations

import csv
import io
import json
import sys
from decimal import Context, Decimal
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Sequence

from ladder_budget.core import Profile, format_ratio, validate_profile
from ladder_budget.errors import BudgetError, InvalidPhantomSystem
from ladder_budget.phantoms import PhantomSystem, custom_system

_DECIMAL = Context(prec=20)


class DocumentError(BudgetError):
    pass


def to_decimal(x: Fraction, digits: int = 20) -> str:
    """Decimal approximation with ``digits`` significant digits, no exponent."""
    ctx = _DECIMAL if digits == 20 else Context(prec=digits)
    d = ctx.divide(Decimal(x.numerator), Decimal(x.denominator))
    return format(d, "f")


def dumps(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def profile_document(p: Profile, name: str | None = None, source: str | None = None) -> dict:
    doc: dict[str, Any] = {"votes": [[format_ratio(v) for v in row] for row in p.votes]}
    if name is not None:
        doc["name"] = name
    if source is not None:
        doc["source"] = source
    return doc


def parse_profile_document(doc: Any) -> Profile:
    if not isinstance(doc, dict) or "votes" not in doc:
        raise DocumentError('profile document must be an object with a "votes" list')
    votes = doc["votes"]
    if not isinstance(votes, list) or not all(isinstance(r, list) for r in votes):
        raise DocumentError('"votes" must be a list of rows')
    return validate_profile(votes)


def _read_json(path: str | Path) -> Any:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DocumentError(f"cannot read {path}: {exc.strerror}") from None
    try:
        # floats keep their literal text so "0.55" and 0.55 both parse exactly
        return json.loads(text, parse_float=str)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


def load_profile(path: str | Path) -> Profile:
    return parse_profile_document(_read_json(path))


def write_profile(path: str | Path, p: Profile, name: str | None = None) -> None:
    text = dumps(profile_document(p, name))
    if str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def parse_phantom_document(doc: Any) -> PhantomSystem:
    if not isinstance(doc, dict) or "n" not in doc or "phantoms" not in doc:
        raise InvalidPhantomSystem('phantom file needs "n" and "phantoms"')
    n = doc["n"]
    if not isinstance(n, int) or isinstance(n, bool):
        raise InvalidPhantomSystem('"n" must be an integer')
    phantoms = doc["phantoms"]
    if not isinstance(phantoms, list):
        raise InvalidPhantomSystem('"phantoms" must be a list of trajectories')
    trajs = []
    for k, pts in enumerate(phantoms):
        if not isinstance(pts, list) or not all(isinstance(pt, list) and len(pt) == 2 for pt in pts):
            raise InvalidPhantomSystem(f"trajectory {k} must be a list of [t, value] pairs")
        trajs.append([(t, y) for t, y in pts])
    return custom_system(n, trajs)


def load_phantom_system(path: str | Path) -> PhantomSystem:
    return parse_phantom_document(_read_json(path))


def phantom_document(system: PhantomSystem) -> dict:
    return {
        "n": system.n,
        "phantoms": [
            [[format_ratio(t), format_ratio(y)] for t, y in f.breakpoints] for f in system.trajectories
        ],
    }


def write_csv(rows: Iterable[Sequence[Any]], header: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


CERTIFY_COLUMNS = (
    "n",
    "m",
    "trials",
    "max_overfund",
    "max_underfund",
    "max_l1",
    "bound_overfund",
    "bound_underfund",
    "bound_l1",
    "witness_id",
)


def certification_csv(report) -> str:
    rows = [
        (
            c.n,
            c.m,
            c.trials,
            format_ratio(c.max_overfund),
            format_ratio(c.max_underfund),
            format_ratio(c.max_l1),
            format_ratio(c.bound_overfund),
            format_ratio(c.bound_underfund),
            format_ratio(c.bound_l1),
            c.witness_id,
        )
        for c in report.cells
    ]
    return write_csv(rows, CERTIFY_COLUMNS)


def certification_json(report) -> dict:
    cells = []
    for c in report.cells:
        cells.append(
            {
                "witness_id": c.witness_id,
                "n": c.n,
                "m": c.m,
                "trials": c.trials,
                "adversarial_instances": c.adversarial,
                "observed": {
                    key: {"value": format_ratio(v), "decimal": to_decimal(v)}
                    for key, v in (
                        ("overfund", c.max_overfund),
                        ("underfund", c.max_underfund),
                        ("l1", c.max_l1),
                    )
                },
                "bounds": {
                    "overfund": format_ratio(c.bound_overfund),
                    "underfund": format_ratio(c.bound_underfund),
                    "l1": format_ratio(c.bound_l1),
                },
                "exceeded": c.exceeded() if report.enforced else [],
                "witnesses": {
                    key: {
                        "label": w.label,
                        "value": format_ratio(w.value),
                        "votes": profile_document(w.profile)["votes"],
                    }
                    for key, w in c.witnesses.items()
                },
            }
        )
    return {
        "mechanism": report.mechanism,
        "n_range": list(report.n_range),
        "m_range": list(report.m_range),
        "trials": report.trials,
        "seed": report.seed,
        "bounds_enforced": report.enforced,
        "ok": report.ok,
        "cells": cells,
    }
