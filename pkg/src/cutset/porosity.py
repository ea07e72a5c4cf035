"""The porosity experiment: functions of finite variation form a porous set in C[0, 1].

Around any f with Var(f) < inf and any eps, the sawtooth g(x) = eps dist((k/2)x, Z)
moves f to a point whose whole eps/8 ball has variation > n, which gives the
bound gamma >= eps/8 and porosity >= 1/4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .analysis import refine_variation
from .sets import as_fraction

NOISE_FRACTION = Fraction(99, 100)
SAFETY = 2


@dataclass(frozen=True)
class PolygonalFunction:
    """Piecewise linear interpolant of exact vertices (x_i, v_i), 0 = x_0 < ... < x_k = 1."""

    xs: tuple[Fraction, ...]
    values: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.xs) != len(self.values) or len(self.xs) < 2:
            raise ValueError("need matching vertex lists with at least two vertices")
        if self.xs[0] != 0 or self.xs[-1] != 1 or any(b <= a for a, b in zip(self.xs, self.xs[1:])):
            raise ValueError("vertices must increase from 0 to 1")

    def __call__(self, x):
        return np.interp(np.asarray(x, dtype=float), [float(a) for a in self.xs], [float(v) for v in self.values])

    def exact(self, x: Fraction) -> Fraction:
        x = as_fraction(x)
        for (a, va), (b, vb) in zip(zip(self.xs, self.values), zip(self.xs[1:], self.values[1:])):
            if a <= x <= b:
                return va + (vb - va) * (x - a) / (b - a)
        raise ValueError(f"{x} outside [0, 1]")

    @property
    def variation(self) -> Fraction:
        return sum((abs(b - a) for a, b in zip(self.values, self.values[1:])), Fraction(0))

    @property
    def sup_norm(self) -> Fraction:
        return max(abs(v) for v in self.values)


def witness_k(V, eps, n: int, safety=SAFETY) -> int:
    """Smallest even k with k eps / 4 > safety * V + n."""
    V, eps = as_fraction(V), as_fraction(eps)
    target = safety * V + n
    k = int(math.floor(4 * target / eps)) + 1
    k += k % 2
    while k > 2 and (k - 2) * eps / 4 > target:
        k -= 2
    return max(k, 2)


def build_polygonal_witness(V, eps, n: int, safety=SAFETY) -> PolygonalFunction:
    """g(x) = eps dist((k/2) x, Z): vertices i/k with values 0, eps/2, 0, ..."""
    if n < 1:
        raise ValueError("n must be at least 1")
    eps = as_fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    if not math.isfinite(float(V)):
        raise ValueError("variation estimate must be finite")
    return sawtooth(eps, witness_k(V, eps, n, safety))


def sawtooth(eps, k: int) -> PolygonalFunction:
    """eps dist((k/2) x, Z) for even k, as exact vertices."""
    if k < 2 or k % 2:
        raise ValueError("k must be a positive even integer")
    eps = as_fraction(eps)
    xs = tuple(Fraction(i, k) for i in range(k + 1))
    vals = tuple(eps / 2 if i % 2 else Fraction(0) for i in range(k + 1))
    return PolygonalFunction(xs, vals)


def partition_sum(h, partition) -> float | Fraction:
    """sum |h(x_i) - h(x_(i-1))| over the partition; exact for polygonal h."""
    pts = list(partition)
    if any(b <= a for a, b in zip(pts, pts[1:])):
        raise ValueError("partition must be strictly increasing")
    if isinstance(h, PolygonalFunction):
        vals = [h.exact(p) for p in pts]
        return sum((abs(b - a) for a, b in zip(vals, vals[1:])), Fraction(0))
    vals = np.asarray(h(np.array([float(p) for p in pts])), dtype=float)
    return math.fsum(np.abs(np.diff(vals)))


def estimate_variation(f: Callable, slack: float = 0.0) -> float:
    """Fine-grid partition lower bound of Var(f, [0, 1]) plus a user slack."""
    v, _, _, _ = refine_variation(f, tol=1e-9, max_depth=18)
    return v + slack


@dataclass
class PorosityReport:
    eps: Fraction
    n: int
    k: int
    variation: float
    witness: PolygonalFunction
    trials: int
    successes: int
    max_distance: float
    min_partition_sum: float
    gamma: Fraction | None = None
    porosity: Fraction | None = None

    @property
    def success_ratio(self) -> float:
        return self.successes / self.trials

    def to_json(self) -> dict:
        return {
            "eps": str(self.eps),
            "n": self.n,
            "k": self.k,
            "variation_estimate": self.variation,
            "trials": self.trials,
            "successes": self.successes,
            "max_distance": self.max_distance,
            "min_partition_sum": self.min_partition_sum,
            "gamma_bound": None if self.gamma is None else str(self.gamma),
            "porosity_bound": None if self.porosity is None else str(self.porosity),
        }


def verify_inclusion(
    f: Callable | None,
    eps,
    n: int,
    trials: int = 200,
    seed: int = 0,
    variation_estimate: float | None = None,
    slack: float = 0.0,
    smooth_noise: bool = False,
) -> PorosityReport:
    """Sample h near g and check ||(f + h) - f|| < eps and the vertex partition sum of f + h > n.

    Vertex noise is uniform in (-0.99 eps/8, 0.99 eps/8) and linear in between;
    with ``smooth_noise`` half of that budget goes to a random sine mode.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    eps = as_fraction(eps)
    f = f if f is not None else (lambda x: np.zeros_like(np.asarray(x, dtype=float)))
    V = estimate_variation(f, slack) if variation_estimate is None else variation_estimate
    g = build_polygonal_witness(V, eps, n)
    k = len(g.xs) - 1
    nodes = np.array([float(x) for x in g.xs])
    gv = np.array([float(v) for v in g.values])
    fv = np.asarray(f(nodes), dtype=float)
    fine = np.linspace(0.0, 1.0, 8 * k + 1)
    radius = float(eps) / 8 * float(NOISE_FRACTION)
    rng = np.random.default_rng(seed)
    ok, worst_dist, worst_sum = 0, 0.0, math.inf
    for _ in range(trials):
        vertex_amp = radius / 2 if smooth_noise else radius
        delta = rng.uniform(-vertex_amp, vertex_amp, size=k + 1)
        hv = gv + delta
        if smooth_noise:
            amp, mode, phase = rng.uniform(0, radius / 2), rng.integers(1, 4 * k), rng.uniform(0, 2 * np.pi)

            def h(x, hv=hv, amp=amp, mode=mode, phase=phase):
                return np.interp(x, nodes, hv) + amp * np.sin(2 * np.pi * mode * x + phase)

            # sup of a polygon is at a vertex; the sine adds at most amp
            dist = float(np.max(np.abs(hv))) + amp
        else:

            def h(x, hv=hv):
                return np.interp(x, nodes, hv)

            dist = float(np.max(np.abs(hv)))
        dist = max(dist, float(np.max(np.abs(h(fine)))))
        psum = math.fsum(np.abs(np.diff(fv + h(nodes))))
        worst_dist = max(worst_dist, dist)
        worst_sum = min(worst_sum, psum)
        if dist < float(eps) and psum > n:
            ok += 1
    report = PorosityReport(eps, n, k, float(V), g, trials, ok, worst_dist, worst_sum)
    bound = porosity_lower_bound(report)
    if bound is not None:
        report.gamma, report.porosity = bound
    return report


def porosity_lower_bound(report: PorosityReport) -> tuple[Fraction, Fraction] | None:
    """(gamma, porosity) = (eps/8, 2 (eps/8)/eps) after a fully successful run, else None."""
    if report.successes != report.trials:
        return None
    gamma = report.eps / 8
    return gamma, 2 * gamma / report.eps


def check_trial(f: Callable | None, g: PolygonalFunction, delta, eps, n: int) -> bool:
    """One inclusion trial for h = g + (vertex noise ``delta``); rejects h outside the sampling ball."""
    eps = as_fraction(eps)
    delta = np.asarray(delta, dtype=float)
    if delta.shape != (len(g.xs),):
        raise ValueError("need one noise value per vertex")
    if float(np.max(np.abs(delta))) > float(eps) / 8 * float(NOISE_FRACTION):
        raise ValueError("perturbation lies outside B(g, 0.99 eps/8)")
    nodes = np.array([float(x) for x in g.xs])
    hv = np.array([float(v) for v in g.values]) + delta
    fv = np.zeros_like(nodes) if f is None else np.asarray(f(nodes), dtype=float)
    return float(np.max(np.abs(hv))) < float(eps) and math.fsum(np.abs(np.diff(fv + hv))) > n
