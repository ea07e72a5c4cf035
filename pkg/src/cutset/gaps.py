"""Binary tree of basic intervals and gaps, and the components of each gap.

Basic intervals ``I_s`` are indexed by binary strings.  The gap ``J_s`` is the
leftmost longest component of ``I_s`` minus the perfect part, so the tree is
well defined for any union of central Cantor parts, not only for a single
central construction.  Points of the countable part split a gap into
components, grouped into blocks by the accumulation points.
"""

from __future__ import annotations

import bisect
import functools
import heapq
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

from .sets import CentralCantorSpec, Membership, ValidatedSet, as_fraction, membership

DEFAULT_BUDGET = 64

# order types of a block: finite, reverse-omega, omega, integers
FINITE, REVERSE_OMEGA, OMEGA, ZETA = "1", "2", "3", "4"


class BudgetExhausted(RuntimeError):
    pass


@dataclass(frozen=True)
class Gap:
    key: str
    left: Fraction
    right: Fraction
    level: int
    extra: bool = False

    @property
    def length(self) -> Fraction:
        return self.right - self.left

    def __contains__(self, x) -> bool:
        return self.left < x < self.right


@dataclass
class GapTree:
    basic: dict[str, tuple[Fraction, Fraction]]
    gaps: dict[str, Gap]
    extra_gaps: list[Gap]
    depth: int
    _by_interval: dict = field(default_factory=dict, repr=False)

    def all_gaps(self) -> list[Gap]:
        return sorted(list(self.gaps.values()) + self.extra_gaps, key=lambda g: g.left)

    def gap(self, key: str) -> Gap:
        if key in self.gaps:
            return self.gaps[key]
        for g in self.extra_gaps:
            if g.key == key:
                return g
        raise KeyError(key)

    def find_gap(self, left: Fraction, right: Fraction) -> Gap | None:
        if not self._by_interval:
            self._by_interval = {(g.left, g.right): g for g in self.all_gaps()}
        return self._by_interval.get((left, right))

    def basic_at_level(self, n: int) -> list[tuple[str, tuple[Fraction, Fraction]]]:
        return sorted(((s, iv) for s, iv in self.basic.items() if len(s) == n), key=lambda t: t[1])


@functools.lru_cache(maxsize=None)
def _subtree_best(part: CentralCantorSpec, n: int) -> tuple[Fraction, int]:
    """Longest gap length inside a level-n node and the deepest level attaining it.

    Gaps below level k are shorter than a level-k node, so the scan stops once
    nodes are no longer than the best gap found.
    """
    best, level = part.gap_length(n), n
    k = n + 1
    while part.length(k) > best:
        g = part.gap_length(k)
        if g >= best:
            best, level = g, k
        k += 1
    return best, level


def _consider(best, glen, gl, gr):
    if best is None or glen > best[0] or (glen == best[0] and gl < best[1]):
        return (glen, gl, gr)
    return best


def _longest_in_part(part: CentralCantorSpec, lo: Fraction, hi: Fraction, best):
    # only nodes straddling lo or hi are expanded; a node inside [lo, hi] is
    # resolved from the per-level table (its leftmost gap at a level is on the
    # left spine, so ties between levels favour the deepest one)
    stack = [(0, part.carrier[0])]
    while stack:
        n, l = stack.pop()
        w = part.length(n)
        r = l + w
        if r <= lo or l >= hi or (best is not None and w <= best[0]):
            continue
        if lo <= l and r <= hi:
            glen, k = _subtree_best(part, n)
            child = part.length(k + 1)
            best = _consider(best, glen, l + child, l + part.length(k) - child)
            continue
        child = part.length(n + 1)
        gl, gr = l + child, r - child
        if lo <= gl and gr <= hi:
            best = _consider(best, gr - gl, gl, gr)
        stack.append((n + 1, r - child))
        stack.append((n + 1, l))
    return best


def leftmost_longest_gap(vs: ValidatedSet, lo: Fraction, hi: Fraction) -> tuple[Fraction, Fraction]:
    """Leftmost longest component of ``[lo, hi]`` minus the perfect part."""
    best = None
    parts = vs.cantor_parts
    for left, right in zip(parts, parts[1:]):
        gl, gr = left.carrier[1], right.carrier[0]
        if gl < gr and lo <= gl and gr <= hi:
            best = _consider(best, gr - gl, gl, gr)
    for part in parts:
        best = _longest_in_part(part, lo, hi, best)
    if best is None:
        raise ValueError(f"[{lo}, {hi}] contains no gap")
    return best[1], best[2]


def build_gap_tree(vs: ValidatedSet, depth: int) -> GapTree:
    """Basic intervals for ``|s| <= depth`` and gaps for ``|s| < depth``."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    for part in vs.cantor_parts:
        part.length(depth + 1)  # raises beyond the rule's representable range
    if vs.hull is None:
        whole = Gap("*", Fraction(0), Fraction(1), 0, extra=True)
        return GapTree({}, {}, [whole], depth)
    basic = {"": vs.hull}
    gaps: dict[str, Gap] = {}
    # basic intervals that coincide with a central node (part, level) are
    # resolved from the per-level table without a search
    parts = vs.cantor_parts
    central = {"": (parts[0], 0)} if len(parts) == 1 else {}
    frontier = [""]
    for level in range(depth):
        nxt = []
        for s in frontier:
            lo, hi = basic[s]
            node = central.get(s)
            if node is not None:
                part, n = node
                glen, k = _subtree_best(part, n)
                child = part.length(k + 1)
                gl, gr = lo + child, lo + part.length(k) - child
                if k == n:
                    central[s + "0"] = central[s + "1"] = (part, n + 1)
            else:
                gl, gr = leftmost_longest_gap(vs, lo, hi)
            gaps[s] = Gap(s, gl, gr, level)
            basic[s + "0"] = (lo, gl)
            basic[s + "1"] = (gr, hi)
            nxt += [s + "0", s + "1"]
        frontier = nxt
    extra = []
    if vs.hull[0] > 0:
        extra.append(Gap("<", Fraction(0), vs.hull[0], 0, extra=True))
    if vs.hull[1] < 1:
        extra.append(Gap(">", vs.hull[1], Fraction(1), 0, extra=True))
    return GapTree(basic, gaps, extra, depth)


# --------------------------------------------------------------------------
# components


@dataclass(frozen=True)
class Component:
    gap: str
    index: int
    left: Fraction
    right: Fraction
    level: int
    block: int
    position: int
    whole: bool = False

    @property
    def length(self) -> Fraction:
        return self.right - self.left

    @property
    def ref(self) -> tuple[str, int]:
        return self.gap, self.index


@dataclass
class Block:
    left: Fraction
    right: Fraction
    order_type: str
    materialized: int = 0
    truncated: bool = False


@dataclass
class ComponentRow:
    gap: Gap
    components: list[Component]
    blocks: list[Block]
    budget: int

    @property
    def truncated(self) -> bool:
        return any(b.truncated for b in self.blocks)


def _gap_q_points(vs: ValidatedSet, lo: Fraction, hi: Fraction):
    pts = vs.finite_points
    finite = list(pts[bisect.bisect_right(pts, lo) : bisect.bisect_left(pts, hi)])
    clusters = [g for g in vs.clusters if any(lo < g.point(s, 0) < hi for s in g.sides)]
    return finite, clusters


def _side_points(g, side: int, lo: Fraction, hi: Fraction) -> Iterator[Fraction]:
    """Points of one side of ``g`` inside (lo, hi), ordered toward the limit."""
    if (side > 0 and g.limit >= hi) or (side < 0 and g.limit <= lo):
        return
    k = 0
    while not lo < g.point(side, k) < hi:
        if (side > 0 and g.point(side, k) <= lo) or (side < 0 and g.point(side, k) >= hi):
            return
        k += 1
    while True:
        p = g.point(side, k)
        if not lo < p < hi:
            return
        yield p
        k += 1


def _stream(finite, clusters, lo, hi, descending: bool) -> Iterator[Fraction]:
    """Merge the Q-points in (lo, hi) into one ordered stream."""
    streams = [sorted((p for p in finite if lo < p < hi), reverse=descending)]
    for g in clusters:
        for side in g.sides:
            natural_desc = side > 0
            infinite = g.limit == (lo if side > 0 else hi)
            it = _side_points(g, side, lo, hi)
            if natural_desc == descending:
                streams.append(it)
            elif infinite:
                raise ValueError("cannot enumerate an accumulating stream away from its limit")
            else:
                streams.append(sorted(it, reverse=descending))
    return heapq.merge(*streams, reverse=descending)


def _accumulates(clusters, point: Fraction, side: int, lo: Fraction, hi: Fraction) -> bool:
    return any(g.limit == point and side in g.sides and lo < g.point(side, 0) < hi for g in clusters)


def _block_components(block: Block, finite, clusters) -> Iterator[tuple[Fraction, Fraction, int]]:
    u, v = block.left, block.right
    t = block.order_type
    if t in (FINITE, OMEGA):
        prev = u
        for pos, p in enumerate(itertools.chain(_stream(finite, clusters, u, v, False), [v] if t == FINITE else [])):
            yield prev, p, pos
            prev = p
    elif t == REVERSE_OMEGA:
        prev = v
        for pos, p in enumerate(_stream(finite, clusters, u, v, True)):
            yield p, prev, -pos
            prev = p
    else:
        yield from _zeta_components(block, finite, clusters)


def _zeta_components(block: Block, finite, clusters):
    # J*_0 is the component whose closure holds the midpoint; when the midpoint
    # is itself a Q-point the component to its right is taken
    u, v = block.left, block.right
    m = (u + v) / 2
    down = _stream(finite, clusters, u, m, True)
    if _is_q_point(finite, clusters, m):
        down = itertools.chain([m], down)
    up = _stream(finite, clusters, m, v, False)
    d_prev, u_prev = next(down), next(up)
    yield d_prev, u_prev, 0
    j = 1
    while True:
        u_next = next(up)
        yield u_prev, u_next, j
        u_prev = u_next
        d_next = next(down)
        yield d_next, d_prev, -j
        d_prev = d_next
        j += 1


def enumerate_components(gt: GapTree, vs: ValidatedSet, key: str, budget: int = DEFAULT_BUDGET) -> ComponentRow:
    gap = gt.gap(key)
    lo, hi = gap.left, gap.right
    finite, clusters = _gap_q_points(vs, lo, hi)
    if not finite and not clusters:
        comp = Component(key, 1, lo, hi, gap.level, 0, 0, whole=True)
        return ComponentRow(gap, [comp], [Block(lo, hi, FINITE, 1)], budget)
    cuts = [lo] + sorted(g.limit for g in clusters if lo < g.limit < hi) + [hi]
    blocks = []
    for u, v in zip(cuts, cuts[1:]):
        left_acc = _accumulates(clusters, u, 1, u, v)
        right_acc = _accumulates(clusters, v, -1, u, v)
        t = {(False, False): FINITE, (True, False): REVERSE_OMEGA, (False, True): OMEGA, (True, True): ZETA}[
            (left_acc, right_acc)
        ]
        blocks.append(Block(u, v, t))
    iters = [_block_components(b, finite, clusters) for b in blocks]
    comps: list[Component] = []
    live = list(range(len(blocks)))
    index = 1
    while live and index <= budget:
        for bi in list(live):
            if index > budget:
                break
            try:
                l, r, pos = next(iters[bi])
            except StopIteration:
                live.remove(bi)
                continue
            comps.append(Component(key, index, l, r, gap.level, bi, pos))
            blocks[bi].materialized += 1
            index += 1
    for bi in live:
        b = blocks[bi]
        if b.order_type != FINITE:
            b.truncated = True
        else:
            try:
                next(iters[bi])
                b.truncated = True
            except StopIteration:
                pass
    return ComponentRow(gap, comps, blocks, budget)


def _is_q_point(finite, clusters, x) -> bool:
    return x in finite or any(g.is_point(x) for g in clusters)


@dataclass
class ComponentTable:
    rows: dict[str, ComponentRow]
    budget: int
    _lefts: list = field(default_factory=list, repr=False)
    _comps: list = field(default_factory=list, repr=False)
    _by_endpoint: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        comps = sorted((c for row in self.rows.values() for c in row.components), key=lambda c: c.left)
        self._comps = comps
        self._lefts = [c.left for c in comps]
        for c in comps:
            self._by_endpoint[("l", c.left)] = c
            self._by_endpoint[("r", c.right)] = c

    def components(self) -> list[Component]:
        return list(self._comps)

    def find(self, x) -> Component | None:
        i = bisect.bisect_left(self._lefts, x) - 1
        if i >= 0 and self._comps[i].left < x < self._comps[i].right:
            return self._comps[i]
        return None

    def truncated_rows(self) -> list[str]:
        return [k for k, row in self.rows.items() if row.truncated]

    def ending_at(self, x) -> Component | None:
        return self._by_endpoint.get(("r", x))

    def starting_at(self, x) -> Component | None:
        return self._by_endpoint.get(("l", x))


def build_component_table(gt: GapTree, vs: ValidatedSet, budget: int = DEFAULT_BUDGET) -> ComponentTable:
    rows = {g.key: enumerate_components(gt, vs, g.key, budget) for g in gt.all_gaps()}
    return ComponentTable(rows, budget)


@dataclass(frozen=True)
class Location:
    kind: str  # "component", "in-F", "unresolved"
    component: Component | None = None
    membership: Membership | None = None


def locate(gt: GapTree, ct: ComponentTable, vs: ValidatedSet, x) -> Location:
    x = as_fraction(x)
    m = membership(vs, x)
    if m is not Membership.OUTSIDE:
        return Location("in-F", membership=m)
    comp = ct.find(x)
    if comp is not None:
        return Location("component", component=comp)
    return Location("unresolved", membership=m)


def neighbours(ct: ComponentTable, comp: Component) -> list[Component]:
    out = []
    left = ct.ending_at(comp.left)
    if left is not None and left.gap == comp.gap:
        out.append(left)
    right = ct.starting_at(comp.right)
    if right is not None and right.gap == comp.gap:
        out.append(right)
    return out
