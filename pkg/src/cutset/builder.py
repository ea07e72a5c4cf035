"""Term collections for the three constructions.

* ``sine``: a C^0 function, one full sine period of amplitude c_n on every gap
  removed at step n of a central Cantor construction;
* ``bumpsine``: a C^infinity function, c_n h(t) sin(2 pi t) on the n-th gap in
  order of decreasing length;
* ``prescribed``: a C^infinity function whose cutting set is a prescribed
  closed nowhere dense set, one signed bump per gap component.

Coefficients are stored as natural logarithms because exp(-1/|J|) leaves the
float range after a handful of levels.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator

import numpy as np

from .gaps import (
    DEFAULT_BUDGET,
    Component,
    ComponentTable,
    GapTree,
    build_component_table,
    build_gap_tree,
)
from .sets import CentralCantorSpec, SetSpec, ValidatedSet, complement_component, validate_spec

BUMP, BUMP_SINE, PLAIN_SINE = "bump", "bump_sine", "plain_sine"
KERNELS = (BUMP, BUMP_SINE, PLAIN_SINE)

CONVENTIONS = [
    "coefficient index shift: prescribed-set coefficients use 1/((n+1)^2 2^i) exp(-1/|J|) "
    "with n the gap level, so level-0 gaps are defined; the level bound reads M_p/(n+1)^2",
    "plain_sine variation: a full sine period of amplitude c has variation 4c, computed by "
    "partition refinement; the value 2c is not reproduced",
    "sign anchors: finite and omega blocks start with + at the least component, reverse-omega "
    "blocks end with + at the greatest, integer-type blocks put + on the component at the block midpoint",
    "gap numbering for bumpsine: decreasing length, ties broken leftmost",
]


@dataclass(frozen=True)
class SignedBumpTerm:
    left: Fraction
    right: Fraction
    sign: int
    log_coeff: float
    kernel: str
    level: int
    index: int = 1
    gap: str = ""
    coeff_expr: str = ""

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if not 0 <= self.left < self.right <= 1:
            raise ValueError("support must be a nondegenerate subinterval of [0, 1]")

    @property
    def length(self) -> Fraction:
        return self.right - self.left

    @property
    def coefficient(self) -> float:
        return math.exp(self.log_coeff)

    @property
    def both_signs(self) -> bool:
        return self.kernel != BUMP

    def sign_pieces(self) -> list[tuple[Fraction, Fraction, int]]:
        """Open subintervals of the support on which the term has constant sign."""
        if self.kernel == BUMP:
            return [(self.left, self.right, self.sign)]
        mid = (self.left + self.right) / 2
        return [(self.left, mid, self.sign), (mid, self.right, -self.sign)]


@dataclass
class PiecewiseFunction:
    terms: list[SignedBumpTerm]
    zero_set: SetSpec
    construction: str
    metadata: dict = field(default_factory=dict)
    _lefts: list = field(default_factory=list, repr=False)
    _vs: ValidatedSet | None = field(default=None, repr=False)

    def __post_init__(self):
        self.terms = sorted(self.terms, key=lambda t: t.left)
        self._lefts = [t.left for t in self.terms]
        self.left_f = np.array([float(t.left) for t in self.terms])
        self.right_f = np.array([float(t.right) for t in self.terms])

    @property
    def validated(self) -> ValidatedSet:
        if self._vs is None:
            self._vs = validate_spec(self.zero_set)
        return self._vs

    def find(self, x) -> int | None:
        """Index of the term whose open support contains ``x``."""
        i = bisect.bisect_right(self._lefts, x) - 1
        if i >= 0 and self.terms[i].left < x < self.terms[i].right:
            return i
        return None

    def window(self, lo, hi) -> range:
        """Indices of terms whose supports meet the open interval (lo, hi)."""
        i = max(bisect.bisect_right(self._lefts, lo) - 1, 0)
        while i < len(self.terms) and self.terms[i].right <= lo:
            i += 1
        j = bisect.bisect_left(self._lefts, hi)
        return range(i, max(i, j))


# --------------------------------------------------------------------------
# coefficient rules for the C^0 construction


@dataclass(frozen=True)
class CoeffRule:
    name: str
    log_fn: Callable[[np.ndarray], np.ndarray]

    def log_c(self, n):
        return self.log_fn(np.asarray(n, dtype=float))

    def __call__(self, n: int) -> float:
        return float(np.exp(self.log_c(n)))


COEFF_RULES = {
    "inv_square": CoeffRule("inv_square", lambda n: -2 * np.log(n)),
    "pow2": CoeffRule("pow2", lambda n: -n * np.log(2)),
    "n_pow2": CoeffRule("n_pow2", lambda n: np.log(n) - n * np.log(2)),
    "harmonic": CoeffRule("harmonic", lambda n: -np.log(n)),
    "constant": CoeffRule("constant", lambda n: np.zeros_like(n)),
}


def coeff_rule(name: str) -> CoeffRule:
    try:
        return COEFF_RULES[name]
    except KeyError:
        raise ValueError(f"unknown coefficient rule {name!r}; choose from {sorted(COEFF_RULES)}") from None


def coefficient_diagnostics(rule: CoeffRule, n_max: int = 2**20) -> dict:
    """Heuristic checks of sum c_n < inf and 2^n c_n -> inf.

    Summability is judged by n c_n -> 0 at ``n_max``; growth by log2(2^n c_n)
    increasing by at least 1/2 between n = 16, 32, 64, 128.
    """
    tail_weight = float(np.exp(np.log(n_max) + rule.log_c(n_max)))
    probes = np.array([16, 32, 64, 128], dtype=float)
    growth = probes + rule.log_c(probes) / np.log(2)
    grows = bool(np.all(np.diff(growth) >= 0.5))
    summable = tail_weight < 1e-3
    return {
        "rule": rule.name,
        "summable": summable,
        "two_pow_diverges": grows,
        "e1_satisfied": summable and grows,
        "heuristic": True,
    }


def rule_tail_sum(rule: CoeffRule, N: int, n_max: int = 2**20) -> float:
    """sum_{n > N} c_n, or inf when the rule is judged non-summable.

    Terms past ``n_max`` are bounded by 2 m c_m at m = max(N, n_max), which
    holds for the summable rules in the registry.
    """
    if not coefficient_diagnostics(rule, n_max)["summable"]:
        return math.inf
    m = max(N, n_max)
    rest = 2 * float(np.exp(np.log(m) + rule.log_c(m)))
    if N >= n_max:
        return rest
    ns = np.arange(N + 1, n_max + 1, dtype=float)
    return float(np.sum(np.exp(rule.log_c(ns)))) + rest


# --------------------------------------------------------------------------
# constructions


def _single_part(spec: CentralCantorSpec | SetSpec) -> tuple[CentralCantorSpec, SetSpec]:
    if isinstance(spec, SetSpec):
        parts = [p for p in spec.parts if isinstance(p, CentralCantorSpec)]
        if len(parts) != 1 or len(spec.parts) != 1:
            raise ValueError("this construction needs a set made of exactly one central Cantor part")
        return parts[0], spec
    return spec, SetSpec([spec])


def build_sine_c0(spec, coeff: CoeffRule | str, depth: int) -> PiecewiseFunction:
    """One plain_sine term per gap removed at steps 1..depth."""
    part, set_spec = _single_part(spec)
    rule = coeff_rule(coeff) if isinstance(coeff, str) else coeff
    terms = []
    for level in range(depth):
        step = level + 1
        lc = float(rule.log_c(step))
        for gl, gr in part.gaps_at_level(level):
            terms.append(SignedBumpTerm(gl, gr, 1, lc, PLAIN_SINE, step, coeff_expr=f"{rule.name}({step})"))
    meta = {"depth": depth, "coeff_rule": rule.name, "level_meaning": "removal step (1-based)"}
    meta["diagnostics"] = coefficient_diagnostics(rule)
    return PiecewiseFunction(terms, set_spec, "sine", meta)


@dataclass(frozen=True)
class LevelBatch:
    """All ``count`` terms removed at one step share kernel and coefficient."""

    step: int
    count: int
    template: SignedBumpTerm


def sine_c0_levels(spec, coeff: CoeffRule | str) -> Iterator[LevelBatch]:
    """Unbounded stream of per-step batches for the C^0 construction."""
    part, _ = _single_part(spec)
    rule = coeff_rule(coeff) if isinstance(coeff, str) else coeff
    a = part.carrier[0]
    level = 0
    while True:
        child = part.length(level + 1)
        template = SignedBumpTerm(
            a + child, a + part.length(level) - child, 1, float(rule.log_c(level + 1)), PLAIN_SINE, level + 1
        )
        yield LevelBatch(level + 1, 2**level, template)
        level += 1


def build_bump_sine_cinf(spec, depth: int) -> PiecewiseFunction:
    """c_n h((x - a_n)/eps_n) sin(2 pi (x - a_n)/eps_n) on the n-th longest gap."""
    part, set_spec = _single_part(spec)
    vs = validate_spec(set_spec)
    gt = build_gap_tree(vs, depth)
    ordered = sorted(gt.gaps.values(), key=lambda g: (-g.length, g.left))
    terms = []
    for n, g in enumerate(ordered, start=1):
        lc = -2 * math.log(n) - float(1 / g.length)
        terms.append(
            SignedBumpTerm(g.left, g.right, 1, lc, BUMP_SINE, n, gap=g.key, coeff_expr=f"{n}^-2 exp(-1/({g.length}))")
        )
    meta = {"depth": depth, "level_meaning": "gap number in decreasing-length order (1-based)"}
    return PiecewiseFunction(terms, set_spec, "bumpsine", meta, _vs=vs)


@dataclass
class SignAssignment:
    signs: dict[tuple[str, int], int]
    parity_gaps: list[str]
    anchors: dict[tuple[str, int], tuple[str, int]]

    def __getitem__(self, ref) -> int:
        return self.signs[ref]


def assign_signs(gt: GapTree, ct: ComponentTable) -> SignAssignment:
    signs, parity, anchors = {}, [], {}
    for key, row in ct.rows.items():
        for c in row.components:
            if c.whole:
                signs[c.ref] = -1 if c.level % 2 else 1
                parity.append(key)
            else:
                signs[c.ref] = -1 if c.position % 2 else 1
                if c.position == 0:
                    anchors[(key, c.block)] = c.ref
    return SignAssignment(signs, parity, anchors)


def prescribed_log_coeff(comp: Component) -> float:
    return -2 * math.log(comp.level + 1) - comp.index * math.log(2) - float(1 / comp.length)


def build_prescribed_cutset(vs: ValidatedSet, depth: int, budget: int = DEFAULT_BUDGET) -> PiecewiseFunction:
    gt = build_gap_tree(vs, depth)
    ct = build_component_table(gt, vs, budget)
    sa = assign_signs(gt, ct)
    terms = [
        SignedBumpTerm(
            c.left,
            c.right,
            sa[c.ref],
            prescribed_log_coeff(c),
            BUMP,
            c.level,
            c.index,
            gap=c.gap,
            coeff_expr=f"(({c.level}+1)^-2 2^-{c.index}) exp(-1/({c.length}))",
        )
        for c in ct.components()
    ]
    meta = {
        "depth": depth,
        "budget": budget,
        "truncated_gaps": ct.truncated_rows(),
        "level_meaning": "gap level |s| (0-based)",
    }
    pf = PiecewiseFunction(terms, vs.spec, "prescribed", meta, _vs=vs)
    pf.gap_tree, pf.components, pf.signs = gt, ct, sa
    return pf


def check_invariants(pf: PiecewiseFunction) -> list[str]:
    """Disjoint supports, supports inside [0, 1] \\ F, and opposite signs across shared endpoints."""
    problems = []
    for a, b in zip(pf.terms, pf.terms[1:]):
        if b.left < a.right:
            problems.append(f"supports ({a.left}, {a.right}) and ({b.left}, {b.right}) overlap")
    vs = pf.validated
    for t in pf.terms:
        try:
            lo, hi = complement_component(vs, (t.left + t.right) / 2)
        except ValueError:
            problems.append(f"support ({t.left}, {t.right}) meets F")
            continue
        if t.left < lo or t.right > hi:
            problems.append(f"support ({t.left}, {t.right}) meets F")
    if pf.construction == "prescribed":
        by_right = {t.right: t for t in pf.terms}
        for t in pf.terms:
            n = by_right.get(t.left)
            if n is not None and n.sign == t.sign:
                problems.append(f"neighbours meeting at {t.left} share sign {t.sign}")
    return problems
