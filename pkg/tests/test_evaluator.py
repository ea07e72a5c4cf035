import dataclasses
import math
from fractions import Fraction as F

import numpy as np
import pytest
from scipy.special import polygamma

from cutset.builder import PiecewiseFunction
from cutset.evaluator import (
    cinf_distance,
    eval_point,
    evaluate,
    omitted_grid_sup,
    signed_log,
    tail_bound,
    term_bound,
)
from cutset.kernel import envelope_constant, h_sup_norm

BUILT = ["prescribed8", "mixed8", "sine8", "bumpsine6"]


def unit_copy(pf: PiecewiseFunction, min_length: float = 1e-6) -> PiecewiseFunction:
    """Same kernels with coefficient 1, so values stay in float range.

    Supports shorter than ``min_length`` are dropped: a difference step of
    1e-7 |J| there falls below the float spacing near x.
    """
    terms = [dataclasses.replace(t, log_coeff=0.0) for t in pf.terms if t.length >= min_length]
    return PiecewiseFunction(terms, pf.zero_set, pf.construction, dict(pf.metadata))


def interior_probes(pf, n, rng, margin=1e-3):
    idx = rng.integers(0, len(pf.terms), n)
    t = rng.uniform(margin, 1 - margin, n)
    return pf.left_f[idx] + (pf.right_f - pf.left_f)[idx] * t, (pf.right_f - pf.left_f)[idx]


def test_value_at_half(prescribed8):
    r = eval_point(prescribed8, F(1, 2))
    assert r.value == pytest.approx(0.5 * math.exp(-3) * math.exp(-8), rel=1e-13)
    assert r.sign == 1 and r.term_id is not None


@pytest.mark.parametrize("x", [F(0), F(1, 3), F(1, 4), F(2, 9), F(1)])
def test_zero_on_the_set(prescribed8, x):
    for p in range(6):
        r = eval_point(prescribed8, x, p)
        assert r.value == 0.0 and r.term_id is None


def test_first_derivative_vanishes_at_bump_midpoints(prescribed8):
    for t in prescribed8.terms[:50]:
        assert eval_point(prescribed8, (t.left + t.right) / 2, 1).value == 0.0


@pytest.mark.parametrize("name", BUILT)
def test_single_term_property(name, request):
    pf = request.getfixturevalue(name)
    xs = np.random.default_rng(3).uniform(0, 1, 10_000)
    inside = (xs[:, None] > pf.left_f[None, :]) & (xs[:, None] < pf.right_f[None, :])
    assert inside.sum(axis=1).max() <= 1


@pytest.mark.parametrize("name", BUILT)
def test_derivatives_match_central_differences(name, request):
    pf = request.getfixturevalue(name)
    rng = np.random.default_rng(5)
    for g in (pf, unit_copy(pf)):
        xs, lens = interior_probes(g, 1000, rng)
        # the exponent slope is ~2/t^3 near the ends, so the step must stay well below t^3
        step = 1e-7 * lens
        xp, xm = xs + step, xs - step
        # probes on supports too short for the float grid have xp == xm
        keep = xp > xm
        assert keep.mean() > 0.9
        xs, xp, xm = xs[keep], xp[keep], xm[keep]
        hi, lo, mid = evaluate(g, xp, 5), evaluate(g, xm, 5), evaluate(g, xs, 5)
        for p in range(1, 6):
            # divide by the realised spacing, not the nominal 2 * step
            fd = (hi[p - 1] - lo[p - 1]) / (xp - xm)
            assert np.all(np.abs(fd - mid[p]) <= 1e-8 + 1e-4 * np.abs(mid[p])), (name, p)


def test_signed_log_keeps_signs_below_float_range(prescribed8):
    deep = [t for t in prescribed8.terms if t.level == 7]
    xs = np.array([float((t.left + t.right) / 2) for t in deep])
    s, l = signed_log(prescribed8, xs, 0)
    assert np.all(s[0] == -1) and np.all(np.isfinite(l[0]))
    assert np.all(evaluate(prescribed8, xs, 0)[0] == 0.0)


def test_term_bound_example(prescribed8):
    top = next(t for t in prescribed8.terms if t.level == 0)
    b = term_bound(top, 0)
    assert b.right == pytest.approx(math.exp(-9) / 2, rel=1e-12)
    # exact sup of a pure bump is c h(1/2) = c e^-8
    assert top.coefficient * math.exp(-8) <= b.middle * (1 + 1e-12)
    assert b.middle <= b.right


@pytest.mark.parametrize("name", BUILT)
def test_middle_below_right(name, request):
    pf = request.getfixturevalue(name)
    for t in pf.terms[:200]:
        for p in range(6):
            b = term_bound(t, p)
            assert b.right > 0
            assert b.log_middle <= math.log(b.right) + 1e-9


def test_tail_example(prescribed8):
    # sum_{n > 10} 1/(n+1)^2 via a direct partial sum
    direct = math.fsum(1 / k**2 for k in range(12, 2_000_000)) + 1 / 2_000_000
    assert direct == pytest.approx(0.0869, abs=5e-5)
    assert tail_bound(prescribed8, 10, 0) / envelope_constant(0, "main") == pytest.approx(direct, rel=1e-6)


@pytest.mark.parametrize("name", ["prescribed8", "mixed8", "bumpsine6"])
def test_tail_monotone_and_dominating(name, request):
    pf = request.getfixturevalue(name)
    for p in range(4):
        tails = [tail_bound(pf, N, p) for N in range(0, 40)]
        assert all(b < a for a, b in zip(tails, tails[1:]))
        assert tail_bound(pf, 10**9, p) < 1e-8 * tails[0]
        for N in (2, 4, 6):
            assert omitted_grid_sup(pf, N, p, per_term=256) <= tail_bound(pf, N, p)


def test_sine_tail_only_for_values(sine8):
    assert tail_bound(sine8, 4, 0) == pytest.approx(float(polygamma(1, 5)), abs=2.0**-19)
    assert tail_bound(sine8, 4, 1) == math.inf


def test_cinf_distance(prescribed8, mixed8):
    zero = PiecewiseFunction([], prescribed8.zero_set, "prescribed", {})
    d, slack = cinf_distance(prescribed8, prescribed8)
    assert d == 0.0 and slack == 2.0**-5
    assert cinf_distance(prescribed8, mixed8)[0] == cinf_distance(mixed8, prescribed8)[0]
    d0, _ = cinf_distance(prescribed8, zero, P=3, m=2**10)
    from cutset.evaluator import cinf_grid

    xs = cinf_grid([prescribed8], 2**10)
    vals = evaluate(prescribed8, xs, 3)
    expect = sum(2.0**-n * min(1.0, float(np.max(np.abs(vals[n])))) for n in range(4))
    assert d0 == pytest.approx(expect, rel=1e-12)
    assert 0 < d0 < 2


def test_sup_norm_cached_value_used_in_bounds(prescribed8):
    t = prescribed8.terms[0]
    b = term_bound(t, 2)
    assert b.log_middle == pytest.approx(t.log_coeff + math.log(h_sup_norm(2)) - 2 * math.log(t.length))
