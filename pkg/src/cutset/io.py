"""JSON persistence for set specs and built functions, and CSV plot data.

Rationals are written as "p/q" strings and log-coefficients as JSON floats
(shortest repr), so a save/load cycle reproduces every term bit for bit.
"""

from __future__ import annotations

import csv
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .builder import CONVENTIONS, PiecewiseFunction, SignedBumpTerm
from .evaluator import evaluate
from .sets import AlphaRule, CentralCantorSpec, PointClusterSpec, RatioRule, SetSpec, SpecError

FORMAT = "cutset-function"

DEVIATIONS = CONVENTIONS + [
    "detection is resolution-bounded: reports carry delta and zeta; E(f) = F is certified only "
    "structurally from the term list",
    "divergence of a variation series is certified by exceeding the bound B",
    "ZC_alpha membership is a heuristic verdict",
    "porosity witness k uses a 2x safety factor on the variation estimate",
]


def _frac(s) -> Fraction:
    try:
        return Fraction(str(s))
    except (ValueError, ZeroDivisionError) as exc:
        raise SpecError(f"not a rational number: {s!r}") from exc


def rule_from_json(d: dict):
    kind = d.get("rule")
    if kind == "ratios":
        return RatioRule(tuple(_frac(r) for r in d.get("ratios", [])), tuple(_frac(r) for r in d.get("tail", [])))
    if kind == "alpha":
        return AlphaRule(_frac(d["alpha"]))
    if kind == "ternary":
        return RatioRule(tail=(Fraction(1, 3),))
    raise SpecError(f"unknown xi rule {kind!r}")


def part_from_json(d: dict):
    kind = d.get("type")
    if kind == "central_cantor":
        carrier = tuple(_frac(c) for c in d.get("carrier", ["0", "1"]))
        return CentralCantorSpec(rule_from_json(d), carrier)
    if kind == "finite_points":
        return PointClusterSpec("finite", tuple(_frac(p) for p in d["points"]))
    if kind == "geometric":
        return PointClusterSpec(
            "geometric",
            limit=_frac(d["limit"]),
            offset=_frac(d["offset"]),
            ratio=_frac(d["ratio"]),
            direction=d.get("direction", "right"),
        )
    raise SpecError(f"unknown part type {kind!r}")


def spec_from_json(d: dict) -> SetSpec:
    if "parts" not in d:
        raise SpecError("set spec needs a 'parts' list")
    return SetSpec(tuple(part_from_json(p) for p in d["parts"]))


def load_spec(path) -> SetSpec:
    try:
        return spec_from_json(json.loads(Path(path).read_text()))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise SpecError(f"malformed set spec {path}: {exc}") from exc


def save_spec(spec: SetSpec, path) -> None:
    Path(path).write_text(json.dumps(spec.to_json(), indent=2) + "\n")


def term_to_json(t: SignedBumpTerm) -> dict:
    return {
        "left": str(t.left),
        "right": str(t.right),
        "sign": t.sign,
        "log_coeff": t.log_coeff,
        "kernel": t.kernel,
        "level": t.level,
        "index": t.index,
        "gap": t.gap,
        "coeff": t.coeff_expr,
    }


def term_from_json(d: dict) -> SignedBumpTerm:
    return SignedBumpTerm(
        _frac(d["left"]),
        _frac(d["right"]),
        int(d["sign"]),
        float(d["log_coeff"]),
        d["kernel"],
        int(d["level"]),
        int(d.get("index", 1)),
        d.get("gap", ""),
        d.get("coeff", ""),
    )


def function_to_json(pf: PiecewiseFunction) -> dict:
    return {
        "format": FORMAT,
        "version": __version__,
        "construction": pf.construction,
        "metadata": pf.metadata,
        "deviations": DEVIATIONS,
        "zero_set": pf.zero_set.to_json(),
        "terms": [term_to_json(t) for t in pf.terms],
    }


def function_from_json(d: dict) -> PiecewiseFunction:
    if d.get("format") != FORMAT:
        raise SpecError("not a cutset function file")
    terms = [term_from_json(t) for t in d["terms"]]
    return PiecewiseFunction(terms, spec_from_json(d["zero_set"]), d["construction"], dict(d.get("metadata", {})))


def save_function(pf: PiecewiseFunction, path) -> None:
    Path(path).write_text(json.dumps(function_to_json(pf)) + "\n")


def load_function(path) -> PiecewiseFunction:
    try:
        return function_from_json(json.loads(Path(path).read_text()))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise SpecError(f"malformed function file {path}: {exc}") from exc


def plot_points(pf: PiecewiseFunction, grid: int) -> np.ndarray:
    """Uniform grid of ``grid`` points plus two points near each end of every support."""
    if grid < 2:
        raise ValueError("grid must be at least 2")
    pts = [np.linspace(0.0, 1.0, grid)]
    if pf.terms:
        fr = np.array([1 / 64, 63 / 64])
        pts.append((pf.left_f[:, None] + (pf.right_f - pf.left_f)[:, None] * fr[None, :]).ravel())
    return np.unique(np.concatenate(pts))


def export_plot_data(pf: PiecewiseFunction, grid: int, orders: int, out=None) -> int:
    """Write CSV rows x, f0, ..., fP; returns the row count."""
    xs = plot_points(pf, grid)
    vals = evaluate(pf, xs, orders)
    own = out is None or isinstance(out, (str, Path))
    fh = sys.stdout if out is None else (open(out, "w", newline="") if own else out)
    try:
        w = csv.writer(fh)
        w.writerow(["x"] + [f"f{p}" for p in range(orders + 1)])
        for i, x in enumerate(xs):
            w.writerow([repr(float(x))] + [repr(float(v) + 0.0) for v in vals[:, i]])
    finally:
        if own and out is not None:
            fh.close()
    return len(xs)


def report_header(command: str, params: dict, seed: int | None = None) -> dict:
    return {
        "tool": "cutset",
        "version": __version__,
        "command": command,
        "seed": seed,
        "params": params,
        "deviations": DEVIATIONS,
    }
