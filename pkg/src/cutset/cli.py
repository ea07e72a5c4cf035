"""Command-line entry point ``cutset``.

Exit codes: 0 success, 1 validation error, 2 certification incomplete
(truncation), 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import io
from .analysis import (
    DEFAULT_BOUND,
    DEFAULT_DELTA,
    DEFAULT_ZETA,
    check_conditions,
    detect_cutting_set,
    reference_distance,
    structured_probes,
    variation,
    verify_ground_truth,
    zc_alpha_probe,
)
from .builder import (
    COEFF_RULES,
    build_bump_sine_cinf,
    build_prescribed_cutset,
    build_sine_c0,
    check_invariants,
    sine_c0_levels,
)
from .evaluator import eval_point, evaluate
from .gaps import DEFAULT_BUDGET, build_component_table, build_gap_tree
from .kernel import MAX_ORDER, envelope_table, h_derivatives
from .porosity import verify_inclusion
from .sets import (
    MembershipUndecided,
    SpecError,
    boundary_accumulation_check,
    cantor_bendixson_split,
    measure,
    validate_spec,
)

EXIT_OK, EXIT_INVALID, EXIT_INCOMPLETE, EXIT_INVARIANT = 0, 1, 2, 3


class InvariantViolation(RuntimeError):
    pass


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    out: str | None = None
    fmt: str = "json"


def _emit(cfg: RunConfig, body: dict) -> None:
    doc = {"header": io.report_header(cfg.command, cfg.params, cfg.seed), **body}
    if cfg.fmt == "text":
        lines = [f"# cutset {cfg.command} (version {doc['header']['version']}, seed {cfg.seed})"]
        lines += [f"# deviation: {d}" for d in doc["header"]["deviations"]]
        for key, val in body.items():
            lines.append(f"{key}: {json.dumps(val, default=str)}")
        text = "\n".join(lines) + "\n"
    else:
        text = json.dumps(doc, indent=2, default=str) + "\n"
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)


def _parse_point(s: str) -> Fraction:
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError):
        raise SpecError(f"not a number: {s!r}") from None


def _cmd_validate(a, cfg):
    vs = validate_spec(io.load_spec(a.spec), a.depth)
    parts, q = cantor_bendixson_split(vs)
    mb = measure(vs, a.depth)
    _emit(cfg, {
        "valid": True,
        "perfect_parts": [p.to_json() for p in parts],
        "isolated_points": [str(p) for p in q["isolated_points"]],
        "clusters": [g.to_json() for g in q["isolated_rules"]],
        "accumulation_points": [str(p) for p in q["accumulation_points"]],
        "boundary": {str(k): v for k, v in boundary_accumulation_check(vs).items()},
        "measure_bracket": [str(mb.lo), str(mb.hi)],
    })
    return EXIT_OK


def _cmd_gaps(a, cfg):
    vs = validate_spec(io.load_spec(a.spec), a.depth)
    gt = build_gap_tree(vs, a.depth)
    ct = build_component_table(gt, vs, a.budget)
    lines, rows = [f"# gap tree, depth {a.depth}, budget {a.budget}"], []
    for g in sorted(gt.all_gaps(), key=lambda g: (g.level, g.left)):
        row = ct.rows.get(g.key)
        comps = [] if row is None else row.components
        types = "" if row is None else " ".join(b.order_type for b in row.blocks)
        flag = " truncated" if row is not None and row.truncated else ""
        lines.append(f"{'  ' * g.level}J[{g.key}] ({g.left}, {g.right}) level {g.level} blocks {types}{flag}")
        rows.append(("gap", g.key, g.left, g.right, g.length))
        for c in comps:
            if not c.whole:
                lines.append(f"{'  ' * g.level}  ({c.left}, {c.right}) i={c.index} block {c.block}")
            rows.append(("component", f"{g.key}:{c.index}", c.left, c.right, c.length))
    text = "\n".join(lines) + "\n"
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    if a.csv:
        with open(a.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["kind", "index", "left", "right", "length"])
            w.writerows([(k, i, str(l), str(r), str(n)) for k, i, l, r, n in rows])
    return EXIT_INCOMPLETE if ct.truncated_rows() else EXIT_OK


def _cmd_kernel(a, cfg):
    if a.envelope:
        t = envelope_table(a.order)
        _emit(cfg, {"sup_norms": t.norms, "M_main": t.main, "M_sine": t.sine, "exp_sup": t.exp_sup})
        return EXIT_OK
    xs = np.linspace(0.0, 1.0, a.samples)
    vals = h_derivatives(xs, a.order)
    fh = open(cfg.out, "w", newline="") if cfg.out else sys.stdout
    w = csv.writer(fh)
    w.writerow(["x"] + [f"h{k}" for k in range(a.order + 1)])
    for i, x in enumerate(xs):
        w.writerow([repr(float(x))] + [repr(float(v) + 0.0) for v in vals[:, i]])
    if cfg.out:
        fh.close()
    return EXIT_OK


def _cmd_build(a, cfg):
    spec = io.load_spec(a.spec)
    if a.construction == "prescribed":
        pf = build_prescribed_cutset(validate_spec(spec), a.depth, a.budget)
    elif a.construction == "bumpsine":
        pf = build_bump_sine_cinf(spec, a.depth)
    else:
        pf = build_sine_c0(spec, a.coeff, a.depth)
    problems = check_invariants(pf)
    if problems:
        raise InvariantViolation("; ".join(problems[:5]))
    io.save_function(pf, a.artifact)
    _emit(cfg, {"function": a.artifact, "terms": len(pf.terms), "metadata": pf.metadata})
    return EXIT_OK


def _cmd_eval(a, cfg):
    pf = io.load_function(a.fn)
    r = eval_point(pf, _parse_point(a.at), a.order)
    _emit(cfg, {"x": a.at, "order": a.order, "value": r.value, "sign": r.sign, "log_abs": r.log_abs,
                "term": None if r.term_id is None else io.term_to_json(pf.terms[r.term_id])})
    return EXIT_OK


def _cmd_sample(a, cfg):
    pf = io.load_function(a.fn)
    rows = io.export_plot_data(pf, a.grid, a.orders, a.artifact)
    if a.artifact:
        _emit(cfg, {"csv": a.artifact, "rows": rows})
    return EXIT_OK


def _probe_grid(pf, n):
    pts = set(np.linspace(0.0, 1.0, n).tolist())
    pts |= {float(p) for p in structured_probes(pf, pf.validated)}
    return sorted(pts)


def _cmd_detect(a, cfg):
    pf = io.load_function(a.fn)
    probes = _probe_grid(pf, a.probes)
    rep = detect_cutting_set(pf, a.delta, a.zeta, probes, reference=reference_distance(pf))
    body = rep.to_json()
    if not a.witnesses:
        body["flagged"] = len(body["flagged"])
    _emit(cfg, body)
    return EXIT_OK


def _cmd_verify(a, cfg):
    pf = io.load_function(a.fn)
    vs = validate_spec(io.load_spec(a.spec)) if a.spec else pf.validated
    rep = verify_ground_truth(pf, vs)
    _emit(cfg, {"probes": rep.probes, "stats": rep.stats,
                "uncertified": [d for d in rep.details if d["status"] not in ("certified", "not-in-E")]})
    if rep.stats["fp"] or rep.stats["fn"]:
        return EXIT_INVARIANT
    return EXIT_INCOMPLETE if rep.stats["below_truncation"] else EXIT_OK


def _series(pf):
    if pf.construction != "sine":
        return None
    return sine_c0_levels(pf.zero_set, pf.metadata["coeff_rule"])


def _cmd_conditions(a, cfg):
    pf = io.load_function(a.fn)
    vs = validate_spec(io.load_spec(a.spec)) if a.spec else pf.validated
    rep = check_conditions(pf, vs, a.orders, a.check_depth, a.bound, _series(pf))
    _emit(cfg, rep.to_json())
    return EXIT_OK


def _cmd_variation(a, cfg):
    pf = io.load_function(a.fn)
    series = _series(pf)
    res = variation(series if series is not None and not a.truncated else pf, bound=a.bound, tol=a.tol)
    _emit(cfg, res.to_json())
    return EXIT_OK


def _cmd_porosity(a, cfg):
    f = None
    if a.fn != "zero":
        pf = io.load_function(a.fn)
        f = lambda x, pf=pf: evaluate(pf, x, 0)[0]  # noqa: E731
    rep = verify_inclusion(f, _parse_point(a.eps), a.n, a.trials, cfg.seed, slack=a.slack, smooth_noise=a.smooth)
    _emit(cfg, rep.to_json())
    if rep.successes != rep.trials:
        return EXIT_INVARIANT
    return EXIT_OK


def _cmd_zcprobe(a, cfg):
    pf = io.load_function(a.fn)
    res = zc_alpha_probe(pf, a.alpha, a.grid, vs=pf.validated, depth=a.depth)
    _emit(cfg, res.to_json())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for every randomized procedure")
    common.add_argument("--format", choices=("json", "text"), default="json")
    report = argparse.ArgumentParser(add_help=False)
    report.add_argument("--out", help="write the report here instead of stdout")
    p = argparse.ArgumentParser(prog="cutset", description="Cutting sets of functions on [0, 1].")
    sub = p.add_subparsers(dest="command", required=True)
    _add = sub.add_parser

    def add(name, help, artifact=False):
        return _add(name, help=help, parents=[common] if artifact else [common, report])

    s = add("validate", "validate a set spec")
    s.add_argument("--spec", required=True)
    s.add_argument("--depth", type=int, default=12)

    s = add("gaps", "gap tree and component table")
    s.add_argument("--spec", required=True)
    s.add_argument("--depth", type=int, default=6)
    s.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    s.add_argument("--csv", help="also write kind,index,left,right,length rows here")

    s = add("kernel", "CSV of h and its derivatives, or the envelope table")
    s.add_argument("--order", type=int, default=2)
    s.add_argument("--samples", type=int, default=257)
    s.add_argument("--envelope", action="store_true", help="print sup norms and envelope constants instead")

    s = add("build", "build a function and save its term list", artifact=True)
    s.add_argument("--spec", required=True)
    s.add_argument("--construction", choices=("sine", "bumpsine", "prescribed"), required=True)
    s.add_argument("--depth", type=int, default=6)
    s.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    s.add_argument("--coeff", choices=sorted(COEFF_RULES), default="inv_square")
    s.add_argument("--out", dest="artifact", default="function.json", help="function file to write")

    s = add("eval", "evaluate f^(p) at a point")
    s.add_argument("--fn", required=True)
    s.add_argument("--at", required=True, help="point, e.g. 1/3 or 0.25")
    s.add_argument("--order", type=int, default=0)

    s = add("sample", "CSV samples x, f0, ..., fP", artifact=True)
    s.add_argument("--fn", required=True)
    s.add_argument("--grid", type=int, default=2**12)
    s.add_argument("--orders", type=int, default=0)
    s.add_argument("--out", dest="artifact", help="CSV path (stdout if omitted)")

    s = add("detect", "resolution-bounded cutting-set detection")
    s.add_argument("--fn", required=True)
    s.add_argument("--delta", type=float, default=DEFAULT_DELTA)
    s.add_argument("--zeta", type=float, default=DEFAULT_ZETA)
    s.add_argument("--probes", type=int, default=4001)
    s.add_argument("--witnesses", action="store_true", help="list every flagged point with witnesses")

    s = add("verify", "structural certification of E(f) = F")
    s.add_argument("--fn", required=True)
    s.add_argument("--spec")

    s = add("conditions", "uniform convergence and sign conditions")
    s.add_argument("--fn", required=True)
    s.add_argument("--spec")
    s.add_argument("--orders", type=int, default=0)
    s.add_argument("--check-depth", dest="check_depth", type=int)
    s.add_argument("--bound", type=float, default=DEFAULT_BOUND)

    s = add("variation", "variation with a divergence certificate")
    s.add_argument("--fn", required=True)
    s.add_argument("--bound", type=float, default=DEFAULT_BOUND)
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--truncated", action="store_true", help="use the stored terms only, not the level series")

    s = add("porosity", "porosity experiment around f")
    s.add_argument("--fn", required=True, help="function file or 'zero'")
    s.add_argument("--eps", default="1")
    s.add_argument("--n", type=int, default=10)
    s.add_argument("--trials", type=int, default=200)
    s.add_argument("--slack", type=float, default=0.0)
    s.add_argument("--smooth", action="store_true", help="add smooth noise between vertices")

    s = add("zcprobe", "heuristic ZC_alpha membership probe")
    s.add_argument("--fn", required=True)
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--grid", type=int, default=2**12)
    s.add_argument("--depth", type=int, default=12)
    return p


COMMANDS = {
    "validate": _cmd_validate,
    "gaps": _cmd_gaps,
    "kernel": _cmd_kernel,
    "build": _cmd_build,
    "eval": _cmd_eval,
    "sample": _cmd_sample,
    "detect": _cmd_detect,
    "verify": _cmd_verify,
    "conditions": _cmd_conditions,
    "variation": _cmd_variation,
    "porosity": _cmd_porosity,
    "zcprobe": _cmd_zcprobe,
}


def run(cfg: RunConfig, args: argparse.Namespace) -> int:
    return COMMANDS[cfg.command](args, cfg)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    params = {k: v for k, v in vars(args).items() if k not in ("command", "seed", "out", "format")}
    cfg = RunConfig(args.command, params, args.seed, getattr(args, "out", None), args.format)
    for key in ("order", "orders"):
        if getattr(args, key, None) is not None and not 0 <= getattr(args, key) <= MAX_ORDER:
            print(f"error: derivative order outside [0, {MAX_ORDER}]", file=sys.stderr)
            return EXIT_INVALID
    try:
        return run(cfg, args)
    except SpecError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except MembershipUndecided as exc:
        print(f"incomplete: {exc}", file=sys.stderr)
        return EXIT_INCOMPLETE
    except (InvariantViolation, AssertionError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
