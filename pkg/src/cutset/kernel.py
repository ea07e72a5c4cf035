"""The smooth bump h(x) = exp(-1/x^2 - 1/(x-1)^2) on (0, 1) and its derivatives.

Derivatives come from truncated power series: the exponent
phi(x) = -x^-2 - (x-1)^-2 has closed-form Taylor coefficients, and the series
of exp(phi) follows from the recurrence k e_k = sum_j j phi_j e_(k-j).  All
jets are kept as ``exp(phi_0) * k! * e_k`` so values far below the float range
keep their sign and logarithm.
"""

from __future__ import annotations

import functools
import math
import os
from dataclasses import dataclass, field

import numpy as np

MAX_ORDER = int(os.environ.get("CUTSET_MAX_ORDER", "16"))
SUP_GRID = 2**12
SUP_RTOL = 1e-6


class OrderError(ValueError):
    pass


def check_order(p: int) -> None:
    if p < 0 or p > MAX_ORDER:
        raise OrderError(f"derivative order {p} outside [0, {MAX_ORDER}]")


@dataclass(frozen=True)
class Jet:
    """[h(x), h'(x), ..., h^(p)(x)] at one point."""

    order: int
    values: np.ndarray

    def __getitem__(self, k: int) -> float:
        return float(self.values[k])


def scaled_jet(t, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(phi0, e)`` with h^(k)(t) = exp(phi0) * k! * e[k].

    Outside (0, 1) ``phi0`` is -inf and ``e`` is zero.  Where the normalised
    series overflows (t within ~1e-5 of an endpoint) it is flushed to zero,
    since the true values underflow by hundreds of orders of magnitude there.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    inside = (t > 0) & (t < 1)
    ti = np.where(inside, t, 0.5)
    u, w = ti, ti - 1.0
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        phi = np.empty((p + 1, t.size))
        phi[0] = -(u**-2) - w**-2
        for k in range(1, p + 1):
            # Taylor coefficient of -(x0 + d)^-2 in d is -(-1)^k (k+1) x0^(-2-k)
            phi[k] = -((-1) ** k) * (k + 1) * (u ** (-2.0 - k) + w ** (-2.0 - k))
        e = np.zeros((p + 1, t.size))
        e[0] = 1.0
        for k in range(1, p + 1):
            acc = np.zeros(t.size)
            for j in range(1, k + 1):
                acc += j * phi[j] * e[k - j]
            e[k] = acc / k
        bad = ~np.all(np.isfinite(e), axis=0) | ~np.isfinite(phi[0])
    phi0 = np.where(inside, phi[0], -np.inf)
    e = np.where(inside & ~bad, e, 0.0)
    e[0] = np.where(inside, 1.0, 0.0)
    phi0 = np.where(np.isfinite(phi0), phi0, -np.inf)
    return phi0, e


_LOG_FACT = np.array([math.lgamma(k + 1) for k in range(MAX_ORDER + 2)])


def log_jet(t, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Signs and natural logs of |h^(k)(t)|, k = 0..p (log is -inf for zeros)."""
    check_order(p)
    phi0, e = scaled_jet(t, p)
    sign = np.sign(e)
    with np.errstate(divide="ignore"):
        logabs = phi0[None, :] + np.log(np.abs(e)) + _LOG_FACT[: p + 1, None]
    logabs = np.where(sign == 0, -np.inf, logabs)
    return sign, logabs


def h_eval(x):
    """h at a point or array; exactly 0 outside (0, 1)."""
    arr = np.asarray(x, dtype=float)
    inside = (arr > 0) & (arr < 1)
    safe = np.where(inside, arr, 0.5)
    with np.errstate(over="ignore", under="ignore"):
        val = np.where(inside, np.exp(-(safe**-2) - (safe - 1.0) ** -2), 0.0)
    return float(val) if val.ndim == 0 else val


def h_derivatives(x, p: int) -> np.ndarray:
    """Array of shape (p+1, n) with h^(k) at each point (underflow goes to 0)."""
    sign, logabs = log_jet(x, p)
    with np.errstate(under="ignore", over="ignore"):
        return sign * np.exp(logabs)


def h_jet(x: float, p: int) -> Jet:
    return Jet(p, h_derivatives(float(x), p)[:, 0])


@functools.lru_cache(maxsize=None)
def h_sup_norm(k: int) -> float:
    """Numerical sup over [0, 1] of |h^(k)|, by grid search and local refinement."""
    check_order(k)
    xs = (np.arange(SUP_GRID) + 0.5) / SUP_GRID
    vals = np.abs(h_derivatives(xs, k)[k])
    step = 1.0 / SUP_GRID
    # refine around the strongest local maxima
    peaks = [i for i in range(1, len(xs) - 1) if vals[i] >= vals[i - 1] and vals[i] >= vals[i + 1]]
    peaks = sorted(peaks, key=lambda i: -vals[i])[:6] or [int(np.argmax(vals))]
    best = float(vals.max())
    for i in peaks:
        x0, v0, half = xs[i], vals[i], step
        while True:
            local = np.clip(np.linspace(x0 - half, x0 + half, 65), 1e-9, 1 - 1e-9)
            lv = np.abs(h_derivatives(local, k)[k])
            j = int(np.argmax(lv))
            x1, v1 = local[j], lv[j]
            done = abs(v1 - v0) <= SUP_RTOL * max(v1, 1e-300) and half < 1e-7
            x0, v0, half = x1, max(v0, v1), half / 16
            if done or half < 1e-15:
                break
        best = max(best, float(v0))
    return best


def exp_power_sup(p: int) -> float:
    """sup over (0, 1] of exp(-1/x) / x^p; the critical point is x = 1/p."""
    if p == 0:
        return math.exp(-1.0)
    return p**p * math.exp(-p)


def envelope_constant(p: int, variant: str = "main") -> float:
    check_order(p)
    if variant == "main":
        return h_sup_norm(p) * exp_power_sup(p)
    if variant == "sine":
        tau = 2 * math.pi
        return tau**p * sum(math.comb(p, k) * tau**-k * h_sup_norm(k) for k in range(p + 1))
    raise ValueError(f"unknown envelope variant {variant!r}")


@dataclass
class EnvelopeTable:
    orders: int
    norms: list[float] = field(default_factory=list)
    main: list[float] = field(default_factory=list)
    sine: list[float] = field(default_factory=list)
    exp_sup: list[float] = field(default_factory=list)


def envelope_table(P: int) -> EnvelopeTable:
    table = EnvelopeTable(P)
    for p in range(P + 1):
        table.norms.append(h_sup_norm(p))
        table.main.append(envelope_constant(p, "main"))
        table.sine.append(envelope_constant(p, "sine"))
        table.exp_sup.append(exp_power_sup(p))
    return table
