"""Point evaluation, derivative bounds and the truncated C^infinity metric.

Supports are pairwise disjoint, so at most one term is nonzero at a point.
Values are carried as (sign, log|value|) pairs; ``value`` is the float
rounding and may underflow to 0 while the sign is still meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import polygamma

from .builder import BUMP, BUMP_SINE, PLAIN_SINE, PiecewiseFunction, SignedBumpTerm, coeff_rule, rule_tail_sum
from .kernel import _LOG_FACT, check_order, envelope_constant, exp_power_sup, h_sup_norm, scaled_jet

TAU = 2 * math.pi
_QUARTER_SIN = np.array([0.0, 1.0, 0.0, -1.0])


@dataclass(frozen=True)
class EvalResult:
    value: float
    sign: int
    log_abs: float
    term_id: int | None
    order: int


def _shifted_sin(t: np.ndarray, quarter: np.ndarray, j: int) -> np.ndarray:
    """sin(2 pi t + j pi / 2), exact where 4t is a known integer ``quarter``."""
    approx = np.sin(TAU * t + j * math.pi / 2)
    exact = _QUARTER_SIN[(quarter + j) % 4]
    return np.where(quarter >= 0, exact, approx)


def _core(kind, log_c, sign, log_len, t, quarter, P):
    """Return (sign, logabs) arrays of shape (P+1, n) for per-point term data."""
    n = t.size
    out_s = np.zeros((P + 1, n))
    out_l = np.full((P + 1, n), -np.inf)
    phi0, e = scaled_jet(t, P)
    orders = np.arange(P + 1)[:, None]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        # pure bump: k! e_k
        m = kind == 0
        if m.any():
            S = e[:, m] * np.exp(_LOG_FACT[: P + 1, None])
            out_s[:, m] = np.sign(S)
            out_l[:, m] = np.log(np.abs(S)) + phi0[m]
        m = kind == 1
        if m.any():
            S = np.zeros((P + 1, int(m.sum())))
            fact = np.exp(_LOG_FACT[: P + 1, None]) * e[:, m]
            sins = [_shifted_sin(t[m], quarter[m], j) for j in range(P + 1)]
            for q in range(P + 1):
                for k in range(q + 1):
                    S[q] += math.comb(q, k) * fact[k] * TAU ** (q - k) * sins[q - k]
            out_s[:, m] = np.sign(S)
            out_l[:, m] = np.log(np.abs(S)) + phi0[m]
        m = kind == 2
        if m.any():
            S = np.stack([TAU**q * _shifted_sin(t[m], quarter[m], q) for q in range(P + 1)])
            out_s[:, m] = np.sign(S)
            out_l[:, m] = np.log(np.abs(S))
        out_l = out_l + log_c[None, :] - orders * log_len[None, :]
        out_s = out_s * sign[None, :]
        out_l = np.where(out_s == 0, -np.inf, out_l)
    return out_s, out_l


_KIND = {BUMP: 0, BUMP_SINE: 1, PLAIN_SINE: 2}


class _TermArrays:
    def __init__(self, pf: PiecewiseFunction):
        ts = pf.terms
        self.kind = np.array([_KIND[t.kernel] for t in ts], dtype=int)
        self.log_c = np.array([t.log_coeff for t in ts])
        self.sign = np.array([t.sign for t in ts], dtype=float)
        self.length = np.array([float(t.length) for t in ts])
        self.log_len = np.log(self.length) if ts else np.array([])


def _arrays(pf: PiecewiseFunction) -> _TermArrays:
    cached = getattr(pf, "_term_arrays", None)
    if cached is None:
        cached = _TermArrays(pf)
        pf._term_arrays = cached
    return cached


def signed_log(pf: PiecewiseFunction, xs, P: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised (sign, log|f^(q)|) for q = 0..P at float points, shape (P+1, n)."""
    check_order(P)
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    sign = np.zeros((P + 1, xs.size))
    logabs = np.full((P + 1, xs.size), -np.inf)
    if not pf.terms:
        return sign, logabs
    arr = _arrays(pf)
    idx = np.searchsorted(pf.left_f, xs, side="right") - 1
    ok = idx >= 0
    idx_c = np.clip(idx, 0, None)
    ok &= (xs > pf.left_f[idx_c]) & (xs < pf.right_f[idx_c])
    if not ok.any():
        return sign, logabs
    ii = idx_c[ok]
    t = (xs[ok] - pf.left_f[ii]) / arr.length[ii]
    q4 = 4 * t
    quarter = np.where(q4 == np.round(q4), np.round(q4), -1).astype(int)
    s, l = _core(arr.kind[ii], arr.log_c[ii], arr.sign[ii], arr.log_len[ii], t, quarter, P)
    sign[:, ok], logabs[:, ok] = s, l
    return sign, logabs


def evaluate(pf: PiecewiseFunction, xs, P: int = 0) -> np.ndarray:
    """Float values of f, f', ..., f^(P) at ``xs``; shape (P+1, n)."""
    s, l = signed_log(pf, xs, P)
    with np.errstate(under="ignore", over="ignore"):
        return s * np.exp(l)


def eval_point(pf: PiecewiseFunction, x, p: int = 0) -> EvalResult:
    """f^(p)(x) with exact support location for rational ``x``."""
    check_order(p)
    xq = x if isinstance(x, Fraction) else Fraction(x)
    i = pf.find(xq)
    if i is None:
        return EvalResult(0.0, 0, -math.inf, None, p)
    term = pf.terms[i]
    tq = (xq - term.left) / term.length
    q4 = 4 * tq
    quarter = int(q4) if q4.denominator == 1 else -1
    s, l = _core(
        np.array([_KIND[term.kernel]]),
        np.array([term.log_coeff]),
        np.array([float(term.sign)]),
        np.array([math.log(term.length)]),
        np.array([float(tq)]),
        np.array([quarter]),
        p,
    )
    sg, la = int(s[p, 0]), float(l[p, 0])
    value = sg * math.exp(la) if sg and la > -745 else 0.0
    return EvalResult(value, sg, la, i, p)


# --------------------------------------------------------------------------
# bounds


@dataclass(frozen=True)
class TermBound:
    """Middle and right members of the per-term sup-norm chain, plus log of the middle."""

    middle: float
    right: float
    log_middle: float


def _log_middle(term: SignedBumpTerm, p: int) -> float:
    log_len = math.log(term.length)
    if term.kernel == BUMP:
        return term.log_coeff + math.log(h_sup_norm(p)) - p * log_len
    if term.kernel == BUMP_SINE:
        norm = sum(math.comb(p, k) * TAU ** (p - k) * h_sup_norm(k) for k in range(p + 1))
        return term.log_coeff + math.log(norm) - p * log_len
    return term.log_coeff + p * (math.log(TAU) - log_len)


def term_bound(term: SignedBumpTerm, p: int) -> TermBound:
    check_order(p)
    lm = _log_middle(term, p)
    if term.kernel == BUMP:
        # c = (n+1)^-2 2^-i exp(-1/|J|); exp(-1/|J|) |J|^-p <= sup_x exp(-1/x) x^-p
        right = envelope_constant(p, "main") / ((term.level + 1) ** 2 * 2**term.index)
    elif term.kernel == BUMP_SINE:
        right = envelope_constant(p, "sine") * exp_power_sup(p) / term.level**2
    else:
        right = math.exp(lm)
    middle = math.exp(lm) if lm > -745 else 0.0
    return TermBound(middle, right, lm)


def _zeta_tail(N: int, shift: int) -> float:
    """sum_{n > N} 1/(n + shift)^2 = trigamma(N + shift + 1)."""
    return float(polygamma(1, N + shift + 1))


def tail_bound(pf: PiecewiseFunction, N: int, p: int) -> float:
    """Bound on sup |sum of f^(p) over terms with level > N| (ideal series)."""
    check_order(p)
    if pf.construction == "prescribed":
        return envelope_constant(p, "main") * _zeta_tail(N, 1)
    if pf.construction == "bumpsine":
        return envelope_constant(p, "sine") * exp_power_sup(p) * _zeta_tail(N, 0)
    if pf.construction == "sine":
        if p > 0:
            return math.inf
        return rule_tail_sum(coeff_rule(pf.metadata["coeff_rule"]), N)
    raise ValueError(f"unknown construction {pf.construction!r}")


def omitted_grid_sup(pf: PiecewiseFunction, N: int, p: int, per_term: int = 2**10) -> float:
    """Largest sampled |f^(p)| over the built terms with level > N."""
    best = 0.0
    for i, term in enumerate(pf.terms):
        if term.level <= N:
            continue
        xs = float(term.left) + float(term.length) * (np.arange(1, per_term + 1) / (per_term + 1))
        best = max(best, float(np.max(np.abs(evaluate(pf, xs, p)[p]))))
    return best


def cinf_grid(pfs, m: int = 2**12) -> np.ndarray:
    pts = [np.linspace(0.0, 1.0, m + 1)]
    for pf in pfs:
        if pf.terms:
            fr = np.array([0.1, 0.25, 0.5, 0.75, 0.9])
            pts.append((pf.left_f[:, None] + (pf.right_f - pf.left_f)[:, None] * fr[None, :]).ravel())
    return np.unique(np.concatenate(pts))


def cinf_distance(f: PiecewiseFunction, g: PiecewiseFunction, P: int = 5, m: int = 2**12) -> tuple[float, float]:
    """Truncated metric sum_{n<=P} 2^-n min(1, grid sup |f^(n) - g^(n)|) and its slack 2^-P."""
    xs = cinf_grid([f, g], m)
    diff = evaluate(f, xs, P) - evaluate(g, xs, P)
    total = sum(2.0**-n * min(1.0, float(np.max(np.abs(diff[n])))) for n in range(P + 1))
    return total, 2.0**-P
