"""Cutting-set detection, structural verification, condition checks, variation
and zero-set probes.

Black-box functions are callables mapping a float array to a float array.  A
``PiecewiseFunction`` is also accepted everywhere and is then sampled in log
space, so signs survive values that underflow (exp(-1/|J|) for deep gaps).
"""

from __future__ import annotations

import bisect
import functools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator

import numpy as np

from .builder import BUMP, BUMP_SINE, PLAIN_SINE, LevelBatch, PiecewiseFunction, SignedBumpTerm
from .evaluator import eval_point, signed_log, tail_bound
from .gaps import build_gap_tree
from .kernel import scaled_jet
from .sets import Membership, ValidatedSet, as_fraction, measure, membership

DEFAULT_DELTA = 1e-4
DEFAULT_ZETA = 1e-12
DEFAULT_BOUND = 1e3
EPSILONS = (1e-2, 1e-4, 1e-6)
RADII = (1, 2, 4, 8)
WINDOW_SAMPLES = 128
MIN_RADIUS = Fraction(1, 2**40)

VARIATION_NOTE = (
    "full-period plain_sine term: computed variation 4c; the stated value 2c_n does not "
    "match partition refinement and is not used"
)


def _signs(f, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(sign, log|f|) of a black box or a PiecewiseFunction at float points."""
    if isinstance(f, PiecewiseFunction):
        s, l = signed_log(f, xs, 0)
        return s[0], l[0]
    v = np.asarray(f(xs), dtype=float)
    with np.errstate(divide="ignore"):
        return np.sign(v), np.log(np.abs(v))


# --------------------------------------------------------------------------
# detection


@dataclass
class CutsetReport:
    flagged: list[tuple[float, float, float]]
    delta: float
    zeta: float
    probes: int
    stats: dict = field(default_factory=dict)
    details: list = field(default_factory=list)
    radii: tuple = ()

    @property
    def flagged_points(self) -> list[float]:
        return [x for x, _, _ in self.flagged]

    def to_json(self) -> dict:
        return {
            "delta": self.delta,
            "zeta": self.zeta,
            "probes": self.probes,
            "radii": list(self.radii),
            "flagged": [{"x": x, "neg": y, "pos": z} for x, y, z in self.flagged],
            "stats": self.stats,
        }


def detect_cutting_set(
    f,
    delta: float = DEFAULT_DELTA,
    zeta: float = DEFAULT_ZETA,
    probes: Iterable[float] | None = None,
    samples: int = WINDOW_SAMPLES,
    reference: Callable[[float], float] | None = None,
) -> CutsetReport:
    """Flag probes x with |f(x)| <= zeta and both signs in (x - r, x + r) for r in delta * RADII.

    The windows are nested, so both signs within delta already settle the
    larger radii; witnesses are recorded from the delta window.
    """
    if delta <= 0 or zeta < 0:
        raise ValueError("need delta > 0 and zeta >= 0")
    xs = np.asarray(sorted(set(float(p) for p in probes)) if probes is not None else np.linspace(0, 1, 1001))
    s0, l0 = _signs(f, xs)
    small = (s0 == 0) | (l0 <= (math.log(zeta) if zeta > 0 else -np.inf))
    flagged = []
    cand = np.nonzero(small)[0]
    if cand.size:
        u = (np.arange(samples) + 0.5) / samples
        lo = np.clip(xs[cand] - delta, 0, 1)
        hi = np.clip(xs[cand] + delta, 0, 1)
        # keep samples strictly inside the open window
        grid = lo[:, None] + (hi - lo)[:, None] * u[None, :]
        gs, _ = _signs(f, grid.ravel())
        gs = gs.reshape(grid.shape)
        for row, i in enumerate(cand):
            neg, pos = np.nonzero(gs[row] < 0)[0], np.nonzero(gs[row] > 0)[0]
            if neg.size and pos.size:
                x = xs[i]
                y = grid[row, neg[np.argmin(np.abs(grid[row, neg] - x))]]
                z = grid[row, pos[np.argmin(np.abs(grid[row, pos] - x))]]
                flagged.append((float(x), float(y), float(z)))
    report = CutsetReport(flagged, delta, zeta, len(xs), radii=tuple(r * delta for r in RADII))
    if reference is not None:
        fl = {x for x, _, _ in flagged}
        stats = dict.fromkeys(("tp", "fp", "fn", "tn", "unresolved", "below_truncation"), 0)
        for x, s in zip(xs, s0):
            d = reference(float(x))
            if d is None:
                # inside an unbuilt region: within the truncation scale of F
                stats["tp" if x in fl else "below_truncation"] += 1
            elif x in fl:
                stats["tp" if d <= delta else "fp"] += 1
            elif d > 0:
                stats["tn"] += 1
            else:
                # a crossing the float probe misses by rounding is not a structural miss
                stats["fn" if s == 0 else "unresolved"] += 1
        report.stats = stats
    return report


def reference_distance(pf: PiecewiseFunction) -> Callable[[float], float | None]:
    """Approximate distance to the zero-crossing set of a built function.

    Inside a term this is the distance to its endpoints lying in F, plus its
    midpoint for sine-type kernels.  A point outside every term is 0 when it is
    a known point of F (a term endpoint or a point of Q) and None otherwise:
    it then lies in an unbuilt region below the truncation scale.
    """
    vs = pf.validated
    in_f = functools.lru_cache(maxsize=None)(lambda e: membership(vs, e) is not Membership.OUTSIDE)
    ends = {t.left for t in pf.terms} | {t.right for t in pf.terms}

    def dist(x: float) -> float | None:
        q = Fraction(x)
        i = pf.find(q)
        if i is None:
            if q in ends or q in vs.finite_points or any(g.limit == q or g.is_point(q) for g in vs.clusters):
                return 0.0 if in_f(q) else None
            return None
        t = pf.terms[i]
        cands = [x - float(t.left)] if in_f(t.left) else []
        if in_f(t.right):
            cands.append(float(t.right) - x)
        if t.kernel != BUMP:
            cands.append(abs(x - float((t.left + t.right) / 2)))
        return min(cands) if cands else math.inf

    return dist


# --------------------------------------------------------------------------
# structural verification


def structured_probes(pf: PiecewiseFunction, vs: ValidatedSet, depth: int | None = None) -> list[Fraction]:
    """Basic-interval endpoints at levels <= depth - 2, gap and component midpoints, Q points."""
    depth = pf.metadata.get("depth", 8) if depth is None else depth
    gt = build_gap_tree(vs, depth)
    pts = {Fraction(0), Fraction(1)}
    for s, (lo, hi) in gt.basic.items():
        if len(s) <= depth - 2:
            pts.update((lo, hi))
    for g in gt.all_gaps():
        pts.add((g.left + g.right) / 2)
    for t in pf.terms:
        pts.add((t.left + t.right) / 2)
        pts.update((t.left, t.right))
    pts.update(vs.finite_points)
    for g in vs.clusters:
        pts.add(g.limit)
        for side in g.sides:
            pts.update(g.point(side, k) for k in range(8))
    return sorted(p for p in pts if 0 <= p <= 1)


def _window_witness(pf: PiecewiseFunction, x: Fraction, r: Fraction):
    """Points y, z within r of x with f(y) < 0 < f(z), taken from the term list."""
    found = {}
    lo, hi = x - r, x + r
    # closest terms first, so witnesses are as near to x as possible
    order = sorted(pf.window(lo, hi), key=lambda i: max(pf.terms[i].left - x, x - pf.terms[i].right, 0))
    for i in order:
        for a, b, sg in pf.terms[i].sign_pieces():
            a2, b2 = max(a, lo), min(b, hi)
            if a2 < b2 and sg not in found:
                found[sg] = (a2 + b2) / 2
        if len(found) == 2:
            return found[-1], found[1]
    return None


def _required_radius(pf, vs, gt, x: Fraction, kind: Membership, shared: list[Fraction]) -> Fraction | None:
    if kind is Membership.IN_D:
        level = max(gt.depth - 2, 0)
        lengths = [hi - lo for s, (lo, hi) in gt.basic.items() if len(s) == level]
        return max(lengths) if lengths else None
    # accumulation point of Q outside D: the closest materialised sign change
    j = bisect.bisect_left(shared, x)
    cands = [abs(shared[k] - x) for k in (j - 1, j, j + 1) if 0 <= k < len(shared) and shared[k] != x]
    return min(cands) * 2 if cands else None


def verify_ground_truth(
    pf: PiecewiseFunction, vs: ValidatedSet, probes: Iterable | None = None
) -> CutsetReport:
    """Certify E(f) = F probe by probe from the term structure.

    F probes need opposite-sign witnesses at every dyadic radius down to the
    scale the truncation supports; off-F probes need f(x) != 0.  Probes below
    the truncation scale are reported, not counted as failures.
    """
    depth = pf.metadata.get("depth", 8)
    gt = build_gap_tree(vs, depth)
    probes = structured_probes(pf, vs, depth) if probes is None else [as_fraction(p) for p in probes]
    by_left = {t.left: t for t in pf.terms}
    by_right = {t.right: t for t in pf.terms}
    shared = sorted(by_left.keys() & by_right.keys())
    stats = {"tp": 0, "tn": 0, "fp": 0, "fn": 0, "below_truncation": 0}
    flagged, details = [], []
    for x in probes:
        kind = membership(vs, x)
        if kind is Membership.OUTSIDE:
            r = eval_point(pf, x)
            if r.term_id is None:
                status = "below-truncation"
                stats["below_truncation"] += 1
            elif r.sign != 0:
                status = "not-in-E"
                stats["tn"] += 1
            else:
                status = "false-positive"
                stats["fp"] += 1
            details.append({"x": str(x), "membership": kind.value, "status": status, "sign": r.sign})
            continue
        value = eval_point(pf, x)
        if kind is Membership.ISOLATED:
            # neighbour pair: the two components meeting at x carry opposite signs,
            # and both meet every window around x
            left, right = by_right.get(x), by_left.get(x)
            if left is None or right is None:
                stats["below_truncation"] += 1
                details.append({"x": str(x), "membership": kind.value, "status": "below-truncation"})
                continue
            r = MIN_RADIUS
            ok = value.sign == 0 and left.sign != right.sign
            neg, pos = (left, right) if left.sign < 0 else (right, left)
            witness = ((neg.left + neg.right) / 2, (pos.left + pos.right) / 2)
        else:
            need = _required_radius(pf, vs, gt, x, kind, shared)
            if need is None:
                stats["below_truncation"] += 1
                details.append({"x": str(x), "membership": kind.value, "status": "below-truncation"})
                continue
            r, witness, ok = Fraction(1, 2), None, value.sign == 0
            while ok:
                witness = _window_witness(pf, x, r)
                ok = witness is not None
                if not ok or r / 2 < need:
                    break
                r /= 2
        if ok:
            stats["tp"] += 1
            flagged.append((float(x), float(witness[0]), float(witness[1])))
            details.append({"x": str(x), "membership": kind.value, "status": "certified", "radius": str(r)})
        else:
            stats["fn"] += 1
            details.append({"x": str(x), "membership": kind.value, "status": "missed", "radius": str(r)})
    stats["agreement"] = stats["fp"] == 0 and stats["fn"] == 0
    return CutsetReport(flagged, 0.0, 0.0, len(probes), stats, details)


# --------------------------------------------------------------------------
# conditions


@dataclass
class ConditionReport:
    cond_i: bool
    n_table: dict
    cond_ii: bool
    hits: dict
    cond_iii: "VariationResult | None"
    order: int
    check_depth: int

    def to_json(self) -> dict:
        return {
            "cond_i": self.cond_i,
            "n_table": {str(k): v for k, v in self.n_table.items()},
            "cond_ii": self.cond_ii,
            "check_depth": self.check_depth,
            "missing": [s for s, h in self.hits.items() if None in h],
            "cond_iii": None if self.cond_iii is None else self.cond_iii.to_json(),
            "order": self.order,
        }


def _first_n(pf, p, eps, n_max=2**62) -> int | None:
    if not math.isfinite(tail_bound(pf, 0, p)):
        return None
    lo, hi = 0, 1
    while tail_bound(pf, hi, p) >= eps:
        hi *= 2
        if hi > n_max:
            return None
    while lo < hi:
        mid = (lo + hi) // 2
        if tail_bound(pf, mid, p) < eps:
            hi = mid
        else:
            lo = mid + 1
    return lo


def check_conditions(
    pf: PiecewiseFunction, vs: ValidatedSet | None = None, P: int = 0, check_depth: int | None = None,
    bound: float = DEFAULT_BOUND, series: Iterator[LevelBatch] | None = None,
) -> ConditionReport:
    """Uniform convergence (M-test tails for orders 0..P) and the sign scan of basic intervals."""
    vs = pf.validated if vs is None else vs
    depth = pf.metadata.get("depth", 8)
    check_depth = depth - 2 if check_depth is None else check_depth
    table = {}
    for p in range(P + 1):
        for eps in EPSILONS:
            table[(p, eps)] = _first_n(pf, p, eps)
    cond_i = all(v is not None for v in table.values())
    gt = build_gap_tree(vs, depth)
    hits = {}
    for s, (lo, hi) in sorted(gt.basic.items()):
        if len(s) > check_depth:
            continue
        neg = pos = None
        for i in pf.window(lo, hi):
            t = pf.terms[i]
            if not (lo <= t.left and t.right <= hi):
                continue
            for _, _, sg in t.sign_pieces():
                if sg < 0 and neg is None:
                    neg = t.gap or str(t.left)
                if sg > 0 and pos is None:
                    pos = t.gap or str(t.left)
            if neg is not None and pos is not None:
                break
        hits[s] = (neg, pos)
    cond_ii = bool(hits) and all(None not in h for h in hits.values())
    cond_iii = variation(series, bound=bound) if series is not None else None
    return ConditionReport(cond_i, table, cond_ii, hits, cond_iii, P, check_depth)


# --------------------------------------------------------------------------
# variation


@dataclass
class VariationResult:
    interval: tuple
    value: float
    status: str
    depth: int
    lower_bound: float | None = None
    level: int | None = None
    partial_sums: list = field(default_factory=list)
    note: str = ""

    def to_json(self) -> dict:
        return {
            "interval": [str(e) for e in self.interval],
            "value": self.value,
            "lower_bound": self.lower_bound,
            "status": self.status,
            "depth": self.depth,
            "level": self.level,
            "note": self.note,
        }


def _shape(kernel: str):
    if kernel == PLAIN_SINE:
        return lambda t: np.sin(2 * np.pi * t)
    if kernel == BUMP_SINE:

        def hs(t):
            phi0, _ = scaled_jet(t, 0)
            with np.errstate(under="ignore"):
                return np.exp(phi0) * np.sin(2 * np.pi * t)

        return hs
    raise ValueError(kernel)


def refine_variation(fn, a: float = 0.0, b: float = 1.0, tol: float = 1e-10, max_depth: int = 22, start: int = 4):
    """Partition sums on nested dyadic grids until the increment drops below ``tol``.

    Returns (lower bound, depth, converged).  Nested partitions make the
    sequence of sums non-decreasing.
    """
    prev, sums = -1.0, []
    for k in range(start, max_depth + 1):
        xs = np.linspace(a, b, 2**k + 1)
        cur = float(np.sum(np.abs(np.diff(np.asarray(fn(xs), dtype=float)))))
        sums.append(cur)
        if prev >= 0 and cur - prev <= tol * max(1.0, cur):
            return cur, k, True, sums
        prev = cur
    return prev, max_depth, False, sums


@functools.lru_cache(maxsize=None)
def _shape_variation(kernel: str, tol: float) -> tuple[float, int, bool]:
    v, k, ok, _ = refine_variation(_shape(kernel), tol=tol)
    return v, k, ok


def term_variation(term: SignedBumpTerm, tol: float = 1e-10) -> VariationResult:
    iv = (term.left, term.right)
    if term.kernel == BUMP:
        # h rises from 0 to h(1/2) = e^-8 and falls back
        return VariationResult(iv, 2 * math.exp(term.log_coeff - 8), "converged", 0, note="unimodal")
    v, k, ok = _shape_variation(term.kernel, tol)
    val = math.exp(term.log_coeff + math.log(v))
    note = VARIATION_NOTE if term.kernel == PLAIN_SINE else ""
    return VariationResult(iv, val, "converged" if ok else "budget", k, lower_bound=val, note=note)


def variation(obj, interval=(0.0, 1.0), tol: float = 1e-10, bound: float = DEFAULT_BOUND, max_levels: int = 4096):
    """Variation of a term, a built function, a per-level series or a black box.

    For a level series the partial sums stop at the first level where they
    exceed ``bound`` (status diverges-past-B) or when the increments fall
    below ``tol`` (status converged).
    """
    if isinstance(obj, SignedBumpTerm):
        return term_variation(obj, tol)
    if isinstance(obj, PiecewiseFunction):
        parts = [term_variation(t, tol) for t in obj.terms]
        total = math.fsum(p.value for p in parts)
        status = "converged" if all(p.status == "converged" for p in parts) else "budget"
        notes = {p.note for p in parts if p.note and p.note != "unimodal"}
        return VariationResult(tuple(interval), total, status, max((p.depth for p in parts), default=0),
                               lower_bound=total, note="; ".join(sorted(notes)))
    if callable(obj) and not isinstance(obj, Iterator):
        a, b = interval
        v, k, ok, _ = refine_variation(obj, float(a), float(b), tol)
        return VariationResult(tuple(interval), v, "converged" if ok else "budget", k, lower_bound=v)
    total, sums = 0.0, []
    for batch in obj:
        tv = term_variation(batch.template, tol)
        inc = batch.count * tv.value
        total += inc
        sums.append(total)
        if total > bound:
            return VariationResult(tuple(interval), total, "diverges-past-B", batch.step, lower_bound=total,
                                   level=batch.step, partial_sums=sums, note=tv.note)
        if inc < tol or batch.step >= max_levels:
            return VariationResult(tuple(interval), total, "converged", batch.step, lower_bound=total,
                                   level=batch.step, partial_sums=sums, note=tv.note)
    return VariationResult(tuple(interval), total, "converged", len(sums), lower_bound=total, partial_sums=sums)


# --------------------------------------------------------------------------
# closedness, nowhere density and endpoint accumulation at resolution


def resolution_checks(report: CutsetReport, probes: Iterable[float], dist: Callable[[float], float]) -> dict:
    """Closedness, nowhere density and endpoint accumulation of the flagged set at resolution delta."""
    delta = report.delta
    xs = sorted(set(float(p) for p in probes))
    flagged = set(report.flagged_points)
    fl = [x for x in xs if x in flagged]
    # limits of flagged sequences at probe resolution: midpoints of flagged pairs spaced < delta
    spacing = max((b - a for a, b in zip(xs, xs[1:])), default=0.0)
    limits = list(fl) + [(a + b) / 2 for a, b in zip(fl, fl[1:]) if b - a <= spacing]
    far = [x for x in limits if (dist(x) or 0.0) > delta]
    runs, start, prev = [], None, None
    for x in xs:
        if x in flagged:
            start = x if start is None else start
            prev = x
        elif start is not None:
            runs.append((start, prev))
            start = None
    if start is not None:
        runs.append((start, prev))
    longest = max((b - a for a, b in runs), default=0.0)
    endpoint = {}
    for e in (0.0, 1.0):
        if e not in flagged:
            endpoint[e] = None
            continue
        r, ok = delta, True
        while r <= 1:
            if not any(0 < abs(x - e) < r for x in fl):
                ok = False
                break
            r *= 2
        endpoint[e] = ok
    return {
        "closed": not far,
        "far_points": far[:10],
        "nowhere_dense": longest <= 4 * delta,
        "longest_run": longest,
        "endpoint_accumulation": all(v is not False for v in endpoint.values()),
        "endpoints": endpoint,
    }


# --------------------------------------------------------------------------
# ZC_alpha probe


@dataclass
class ZCProbe:
    alpha: float
    has_zero: bool
    empty_interior: bool
    longest_flat: float
    zero_fraction: float
    measure_estimates: dict
    structural_bracket: tuple | None
    member: bool
    heuristic: bool = True

    def to_json(self) -> dict:
        d = dict(self.__dict__)
        d["measure_estimates"] = {str(k): v for k, v in self.measure_estimates.items()}
        if self.structural_bracket is not None:
            d["structural_bracket"] = [float(v) for v in self.structural_bracket]
        return d


def zc_alpha_probe(
    f, alpha: float, grid: int = 2**12, zetas=(1e-3, 1e-6, 1e-9, 1e-12), vs: ValidatedSet | None = None,
    depth: int = 12,
) -> ZCProbe:
    """Heuristic test of: a zero exists, the zero set has empty interior, its measure is >= alpha."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    xs = np.linspace(0.0, 1.0, grid + 1)
    if isinstance(f, PiecewiseFunction) and f.terms:
        extra = (f.left_f[:, None] + (f.right_f - f.left_f)[:, None] * np.array([0.25, 0.5, 0.75])).ravel()
        xs = np.unique(np.concatenate([xs, extra]))
    s, l = _signs(f, xs)
    zero = s == 0
    has_zero = bool(zero.any() or np.any(s[:-1] * s[1:] < 0))
    longest, start = 0.0, None
    for x, z in zip(xs, zero):
        if z:
            start = x if start is None else start
            longest = max(longest, x - start)
        else:
            start = None
    resolution = 4.0 / grid
    empty_interior = longest <= resolution
    # uniform-grid fractions only, so the refinement points do not bias the estimate
    us, ul = _signs(f, np.linspace(0.0, 1.0, grid + 1))
    est = {z: float(np.mean((us == 0) | (ul <= math.log(z)))) for z in zetas}
    zf = float(np.mean(us == 0))
    bracket = None
    if vs is not None:
        mb = measure(vs, depth)
        bracket = (mb.lo, mb.hi)
    mass = float(bracket[0]) if bracket is not None else zf
    member = has_zero and empty_interior and mass >= alpha
    return ZCProbe(alpha, has_zero, bool(empty_interior), float(longest), zf, est, bracket, bool(member))
