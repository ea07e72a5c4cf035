"""Finitely described closed nowhere dense subsets of [0, 1].

A set is a finite union of *parts*: central Cantor sets mapped affinely onto a
rational carrier, finite point lists, and geometric point clusters
``{y} | {y + side * a * r**k : k >= 0}``.  Every endpoint and every membership
answer is computed with exact rational arithmetic.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterator, Sequence

DEFAULT_DEPTH = 12
MAX_WALK = 2000


class SpecError(ValueError):
    """A set description that cannot be accepted."""


class OverlapError(SpecError):
    pass


class XiRuleError(SpecError):
    pass


class HypothesisError(SpecError):
    """0 or 1 is an isolated point of the set."""


class MembershipUndecided(RuntimeError):
    pass


class Membership(str, Enum):
    IN_D = "in-D"
    ISOLATED = "isolated-x_n"
    ACCUMULATION = "accumulation-y_n"
    OUTSIDE = "outside-F"


def as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


# --------------------------------------------------------------------------
# xi rules


@dataclass(frozen=True)
class RatioRule:
    """xi_{n+1} = ratio_n * xi_n with ratios ``prefix`` then ``tail`` repeated.

    An empty tail makes the rule finite: only ``len(prefix)`` levels exist.
    """

    prefix: tuple[Fraction, ...] = ()
    tail: tuple[Fraction, ...] = ()
    _cache: list = field(default_factory=lambda: [Fraction(1)], compare=False, repr=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(as_fraction(r) for r in self.prefix))
        object.__setattr__(self, "tail", tuple(as_fraction(r) for r in self.tail))
        if not self.prefix and not self.tail:
            raise XiRuleError("ratio rule needs at least one ratio")
        for r in self.prefix + self.tail:
            if not 0 < r < Fraction(1, 2):
                raise XiRuleError(f"ratio {r} violates 0 < xi_(n+1)/xi_n < 1/2")

    @property
    def max_level(self) -> int | None:
        return None if self.tail else len(self.prefix)

    def ratio(self, n: int) -> Fraction:
        if n < len(self.prefix):
            return self.prefix[n]
        if not self.tail:
            raise XiRuleError(f"level {n + 1} beyond the finite ratio list")
        return self.tail[(n - len(self.prefix)) % len(self.tail)]

    def xi(self, n: int) -> Fraction:
        cache = self._cache
        while len(cache) <= n:
            cache.append(cache[-1] * self.ratio(len(cache) - 1))
        return cache[n]

    def period(self) -> tuple[int, int] | None:
        """(start level, period length) of the repeating tail."""
        return (len(self.prefix), len(self.tail)) if self.tail else None

    def limit_scaled(self) -> Fraction:
        # a repeating tail multiplies 2^n xi_n by prod(2 r) < 1 each period
        return Fraction(0)

    def to_json(self) -> dict:
        return {"rule": "ratios", "ratios": [str(r) for r in self.prefix], "tail": [str(r) for r in self.tail]}


@dataclass(frozen=True)
class AlphaRule:
    """xi_n = (alpha + (1 - alpha) 2^-n) / 2^n, so 2^n xi_n decreases to alpha."""

    alpha: Fraction

    def __post_init__(self):
        object.__setattr__(self, "alpha", as_fraction(self.alpha))
        if not 0 <= self.alpha < 1:
            raise XiRuleError(f"alpha must lie in [0, 1), got {self.alpha}")

    max_level = None

    def xi(self, n: int) -> Fraction:
        p = Fraction(1, 2**n)
        return (self.alpha + (1 - self.alpha) * p) * p

    def ratio(self, n: int) -> Fraction:
        return self.xi(n + 1) / self.xi(n)

    def period(self):
        return None

    def limit_scaled(self) -> Fraction:
        return self.alpha

    def to_json(self) -> dict:
        return {"rule": "alpha", "alpha": str(self.alpha)}


def ternary_rule() -> RatioRule:
    return RatioRule(tail=(Fraction(1, 3),))


# --------------------------------------------------------------------------
# parts


@functools.lru_cache(maxsize=None)
def _central_length(part: "CentralCantorSpec", n: int) -> Fraction:
    part._check_level(n)
    return part.scale * part.rule.xi(n)


@dataclass(frozen=True)
class CentralCantorSpec:
    rule: RatioRule | AlphaRule
    carrier: tuple[Fraction, Fraction] = (Fraction(0), Fraction(1))

    def __post_init__(self):
        a, b = (as_fraction(c) for c in self.carrier)
        object.__setattr__(self, "carrier", (a, b))
        if not 0 <= a < b <= 1:
            raise SpecError(f"carrier [{a}, {b}] is not a nondegenerate subinterval of [0, 1]")

    @property
    def scale(self) -> Fraction:
        return self.carrier[1] - self.carrier[0]

    def length(self, n: int) -> Fraction:
        """Length of a level-n basic interval of the central construction."""
        return _central_length(self, n)

    def gap_length(self, n: int) -> Fraction:
        return self.length(n) - 2 * self.length(n + 1)

    def _check_level(self, n: int) -> None:
        top = self.rule.max_level
        if top is not None and n > top:
            raise XiRuleError(f"level {n} exceeds the representable range ({top}) of the xi rule")

    def walk(self, x: Fraction) -> tuple[str, object]:
        """Locate ``x`` relative to this Cantor set.

        Returns ``("in", None)``, ``("gap", (left, right, level))`` for a removed
        interval, or ``("outside", (lo, hi))`` where ``None`` marks an unbounded side.
        """
        a, b = self.carrier
        if x < a:
            return "outside", (None, a)
        if x > b:
            return "outside", (b, None)
        L = self.scale
        t = (x - a) / L
        lo, width = Fraction(0), Fraction(1)
        seen: set = set()
        period = self.rule.period()
        for n in range(MAX_WALK):
            if t == lo or t == lo + width:
                return "in", None
            if period is not None and n >= period[0]:
                state = ((t - lo) / width, (n - period[0]) % period[1])
                if state in seen:
                    return "in", None
                seen.add(state)
            self._check_level(n + 1)
            child = self.rule.xi(n + 1)
            if t <= lo + child:
                width = child
            elif t >= lo + width - child:
                lo, width = lo + width - child, child
            else:
                return "gap", (a + L * (lo + child), a + L * (lo + width - child), n)
        raise MembershipUndecided(f"membership of {x} undecided after {MAX_WALK} levels")

    def contains(self, x: Fraction) -> bool:
        return self.walk(x)[0] == "in"

    def gaps_at_level(self, n: int) -> list[tuple[Fraction, Fraction]]:
        """The 2^n central gaps removed at level n, left to right."""
        lefts = [self.carrier[0]]
        for k in range(n):
            w, child = self.length(k), self.length(k + 1)
            lefts = [l for x in lefts for l in (x, x + w - child)]
        w, child = self.length(n), self.length(n + 1)
        return [(x + child, x + w - child) for x in lefts]

    def to_json(self) -> dict:
        out = {"type": "central_cantor", "carrier": [str(c) for c in self.carrier]}
        out.update(self.rule.to_json())
        return out


@dataclass(frozen=True)
class PointClusterSpec:
    """Either a finite list of points or a geometric cluster around ``limit``."""

    kind: str
    points: tuple[Fraction, ...] = ()
    limit: Fraction | None = None
    offset: Fraction | None = None
    ratio: Fraction | None = None
    direction: str = "right"

    def __post_init__(self):
        if self.kind == "finite":
            pts = tuple(sorted(as_fraction(p) for p in self.points))
            object.__setattr__(self, "points", pts)
            for p in pts:
                if not 0 <= p <= 1:
                    raise SpecError(f"point {p} outside [0, 1]")
            if len(set(pts)) != len(pts):
                raise OverlapError("duplicate points in a finite point list")
        elif self.kind == "geometric":
            for name in ("limit", "offset", "ratio"):
                if getattr(self, name) is None:
                    raise SpecError(f"geometric cluster needs {name}")
                object.__setattr__(self, name, as_fraction(getattr(self, name)))
            if self.direction not in ("left", "right", "both"):
                raise SpecError(f"unknown direction {self.direction!r}")
            if not 0 < self.ratio < 1:
                raise SpecError("geometric ratio must lie in (0, 1)")
            if self.offset <= 0:
                raise SpecError("geometric offset must be positive")
            lo, hi = self.hull
            if not 0 <= lo <= hi <= 1:
                raise SpecError("geometric cluster leaves [0, 1]")
        else:
            raise SpecError(f"unknown cluster kind {self.kind!r}")

    @property
    def sides(self) -> tuple[int, ...]:
        return {"left": (-1,), "right": (1,), "both": (-1, 1)}[self.direction]

    @property
    def hull(self) -> tuple[Fraction, Fraction]:
        if self.kind == "finite":
            return self.points[0], self.points[-1]
        lo = self.limit - self.offset if -1 in self.sides else self.limit
        hi = self.limit + self.offset if 1 in self.sides else self.limit
        return lo, hi

    def point(self, side: int, k: int) -> Fraction:
        return self.limit + side * self.offset * self.ratio**k

    def iter_side(self, side: int) -> Iterator[Fraction]:
        k = 0
        while True:
            yield self.point(side, k)
            k += 1

    def _power_index(self, q: Fraction) -> int | None:
        """k >= 0 with ratio**k == q, else None."""
        if q <= 0 or q > 1:
            return None
        k = self._floor_index(q)
        return k if self.ratio**k == q else None

    def _floor_index(self, q: Fraction) -> int:
        """Largest k >= 0 with ratio**k >= q, for 0 < q <= 1."""
        lr = _log(self.ratio)
        k = max(0, int(math.floor(_log(q) / lr)))
        while k > 0 and self.ratio**k < q:
            k -= 1
        while self.ratio ** (k + 1) >= q:
            k += 1
        return k

    def is_point(self, x: Fraction) -> bool:
        if self.kind == "finite":
            return x in self.points
        for side in self.sides:
            if self._power_index(side * (x - self.limit) / self.offset) is not None:
                return True
        return False

    def bracket(self, x: Fraction) -> tuple[Fraction | None, Fraction | None]:
        """Nearest cluster points (limit included) strictly left and right of ``x``."""
        if self.kind == "finite":
            left = [p for p in self.points if p < x]
            right = [p for p in self.points if p > x]
            return (left[-1] if left else None, right[0] if right else None)
        y = self.limit
        if x == y:
            raise ValueError("x is the cluster limit")
        side = 1 if x > y else -1
        if side not in self.sides:
            return (None, y) if side < 0 else (y, None)
        q = side * (x - y) / self.offset
        if q > 1:
            far = self.point(side, 0)
            return (far, None) if side > 0 else (None, far)
        k = self._floor_index(q)
        outer, inner = self.point(side, k), self.point(side, k + 1)
        return (inner, outer) if side > 0 else (outer, inner)

    def to_json(self) -> dict:
        if self.kind == "finite":
            return {"type": "finite_points", "points": [str(p) for p in self.points]}
        return {
            "type": "geometric",
            "limit": str(self.limit),
            "offset": str(self.offset),
            "ratio": str(self.ratio),
            "direction": self.direction,
        }


def _log(q: Fraction) -> float:
    return math.log(q.numerator) - math.log(q.denominator)


@dataclass(frozen=True)
class SetSpec:
    parts: tuple

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))

    def to_json(self) -> dict:
        return {"parts": [p.to_json() for p in self.parts]}


# --------------------------------------------------------------------------
# validated sets


@dataclass(frozen=True)
class MeasureBracket:
    lo: Fraction
    hi: Fraction
    depth: int


@dataclass(frozen=True)
class ValidatedSet:
    spec: SetSpec
    cantor_parts: tuple[CentralCantorSpec, ...]
    finite_points: tuple[Fraction, ...]
    clusters: tuple[PointClusterSpec, ...]
    accumulation: tuple[Fraction, ...]
    hull: tuple[Fraction, Fraction] | None
    boundary: dict
    depth: int = DEFAULT_DEPTH

    @property
    def perfect_empty(self) -> bool:
        return not self.cantor_parts

    def in_D(self, x: Fraction) -> bool:
        return any(part.contains(x) for part in self.cantor_parts)


def validate_spec(spec: SetSpec, depth: int = DEFAULT_DEPTH) -> ValidatedSet:
    """Check a set description and split it into perfect and countable parts."""
    cantor = sorted((p for p in spec.parts if isinstance(p, CentralCantorSpec)), key=lambda p: p.carrier)
    finite = [p for p in spec.parts if isinstance(p, PointClusterSpec) and p.kind == "finite"]
    geometric = [p for p in spec.parts if isinstance(p, PointClusterSpec) and p.kind == "geometric"]
    if len(cantor) + len(finite) + len(geometric) != len(spec.parts):
        raise SpecError("unknown part type")

    for left, right in zip(cantor, cantor[1:]):
        if right.carrier[0] < left.carrier[1]:
            raise OverlapError(f"carriers {left.carrier} and {right.carrier} overlap")

    def in_D(x):
        return any(p.contains(x) for p in cantor)

    points: list[Fraction] = []
    for part in finite:
        for p in part.points:
            if in_D(p):
                raise OverlapError(f"point {p} lies in a Cantor part")
            points.append(p)
    if len(set(points)) != len(points):
        raise OverlapError("a point is listed twice")

    hulls = []
    for g in geometric:
        _check_cluster_in_one_gap(g, cantor)
        hulls.append(g.hull)
        for p in points:
            if p == g.limit or g.is_point(p):
                raise OverlapError(f"point {p} coincides with a geometric cluster point")
    order = sorted(range(len(geometric)), key=lambda i: hulls[i])
    for i, j in zip(order, order[1:]):
        if hulls[j][0] <= hulls[i][1]:
            raise OverlapError("geometric clusters overlap")

    accumulation = sorted(g.limit for g in geometric if not in_D(g.limit))
    hull = (cantor[0].carrier[0], cantor[-1].carrier[1]) if cantor else None
    vs = ValidatedSet(
        spec=spec,
        cantor_parts=tuple(cantor),
        finite_points=tuple(sorted(points)),
        clusters=tuple(geometric),
        accumulation=tuple(accumulation),
        hull=hull,
        boundary={},
        depth=depth,
    )
    report = boundary_accumulation_check(vs)
    vs.boundary.update(report)
    for end, status in report.items():
        if status == "isolated":
            raise HypothesisError(f"{end} is an isolated point of F; it must be an accumulation point or absent")
    return vs


def _check_cluster_in_one_gap(g: PointClusterSpec, cantor: Sequence[CentralCantorSpec]) -> None:
    y = g.limit
    y_in_D = any(p.contains(y) for p in cantor)
    for side in g.sides:
        first = g.point(side, 0)
        lo, hi = Fraction(0), Fraction(1)
        for part in cantor:
            kind, info = part.walk(first)
            if kind == "in":
                raise OverlapError(f"cluster point {first} lies in a Cantor part")
            l, r = info[0], info[1]
            if l is not None:
                lo = max(lo, l)
            if r is not None:
                hi = min(hi, r)
        # the closed segment between the limit and the first point must avoid D
        if y_in_D:
            ok = (side > 0 and y == lo) or (side < 0 and y == hi)
        else:
            ok = lo < y < hi or (y == lo == 0) or (y == hi == 1)
        if not ok:
            raise OverlapError(f"geometric cluster at {y} is not contained in a single gap of the perfect part")


def membership(vs: ValidatedSet, x) -> Membership:
    x = as_fraction(x)
    if not 0 <= x <= 1:
        raise ValueError(f"{x} outside [0, 1]")
    if vs.in_D(x):
        return Membership.IN_D
    if x in vs.finite_points:
        return Membership.ISOLATED
    for g in vs.clusters:
        if x == g.limit:
            return Membership.ACCUMULATION
        if g.is_point(x):
            return Membership.ISOLATED
    return Membership.OUTSIDE


def complement_component(vs: ValidatedSet, x) -> tuple[Fraction, Fraction]:
    """The component of [0, 1] \\ F containing ``x`` (endpoints may be 0 or 1 outside F)."""
    x = as_fraction(x)
    if x in vs.finite_points:
        raise ValueError(f"{x} lies in F")
    lo, hi = Fraction(0), Fraction(1)
    for part in vs.cantor_parts:
        kind, info = part.walk(x)
        if kind == "in":
            raise ValueError(f"{x} lies in F")
        if info[0] is not None:
            lo = max(lo, info[0])
        if info[1] is not None:
            hi = min(hi, info[1])
    others = [PointClusterSpec("finite", vs.finite_points)] if vs.finite_points else []
    for g in list(vs.clusters) + others:
        if g.kind == "geometric" and (x == g.limit or g.is_point(x)):
            raise ValueError(f"{x} lies in F")
        left, right = g.bracket(x)
        if left is not None:
            lo = max(lo, left)
        if right is not None:
            hi = min(hi, right)
    return lo, hi


def distance_to_set(vs: ValidatedSet, x) -> Fraction | None:
    """Exact distance from ``x`` to F, or None when F is empty."""
    x = as_fraction(x)
    if membership(vs, x) is not Membership.OUTSIDE:
        return Fraction(0)
    lo, hi = complement_component(vs, x)
    cands = [x - e for e in (lo,) if membership(vs, e) is not Membership.OUTSIDE]
    cands += [e - x for e in (hi,) if membership(vs, e) is not Membership.OUTSIDE]
    return min(cands) if cands else None


def measure(vs: ValidatedSet, depth: int | None = None) -> MeasureBracket:
    """Bracket on the Lebesgue measure of F from the truncated construction."""
    N = vs.depth if depth is None else depth
    lo = hi = Fraction(0)
    for part in vs.cantor_parts:
        hi += part.scale * 2**N * part.rule.xi(N)
        lo += part.scale * part.rule.limit_scaled()
    return MeasureBracket(lo, hi, N)


def cantor_bendixson_split(vs: ValidatedSet) -> tuple[tuple[CentralCantorSpec, ...], dict]:
    q = {
        "isolated_points": list(vs.finite_points),
        "isolated_rules": [g for g in vs.clusters],
        "accumulation_points": list(vs.accumulation),
    }
    return vs.cantor_parts, q


def boundary_accumulation_check(vs: ValidatedSet) -> dict:
    out = {}
    for end in (0, 1):
        m = membership(vs, Fraction(end))
        if m is Membership.OUTSIDE:
            out[end] = "not-in-F"
        elif m is Membership.ISOLATED:
            out[end] = "isolated"
        else:
            out[end] = "accumulation-point"
    return out
