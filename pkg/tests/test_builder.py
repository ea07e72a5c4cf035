import math
from fractions import Fraction as F

import numpy as np
import pytest

from cutset.builder import (
    BUMP,
    BUMP_SINE,
    PLAIN_SINE,
    SignedBumpTerm,
    assign_signs,
    build_prescribed_cutset,
    build_sine_c0,
    check_invariants,
    coeff_rule,
    coefficient_diagnostics,
    rule_tail_sum,
    sine_c0_levels,
)
from cutset.evaluator import eval_point, signed_log
from cutset.gaps import build_component_table, build_gap_tree
from cutset.sets import CentralCantorSpec, PointClusterSpec, SetSpec, ternary_rule, validate_spec

from conftest import ternary_spec


def test_sine_first_gap_amplitude_one():
    pf = build_sine_c0(ternary_spec(), "inv_square", 3)
    first = [t for t in pf.terms if (t.left, t.right) == (F(1, 3), F(2, 3))]
    assert len(first) == 1 and first[0].coefficient == 1.0 and first[0].level == 1
    assert len(pf.terms) == 1 + 2 + 4
    assert all(t.kernel == PLAIN_SINE for t in pf.terms)


def test_coefficient_diagnostics():
    assert coefficient_diagnostics(coeff_rule("inv_square")) == {"summable": True, "two_pow_diverges": True} or (
        coefficient_diagnostics(coeff_rule("inv_square"))["summable"]
        and coefficient_diagnostics(coeff_rule("inv_square"))["two_pow_diverges"]
    )
    d = coefficient_diagnostics(coeff_rule("pow2"))
    assert d["summable"] and not d["two_pow_diverges"]
    assert not coefficient_diagnostics(coeff_rule("harmonic"))["summable"]


def test_rule_tail_sum_oracle():
    # the exact tail of sum 1/n^2 is the trigamma value psi'(N + 1); the reported
    # sum is an upper bound whose remainder term overshoots by at most 2/2^20
    from scipy.special import polygamma

    for N in (1, 10, 100):
        exact = float(polygamma(1, N + 1))
        got = rule_tail_sum(coeff_rule("inv_square"), N)
        assert exact <= got <= exact + 2.0**-19
    assert rule_tail_sum(coeff_rule("harmonic"), 10) == math.inf


def test_level_stream_matches_builder():
    pf = build_sine_c0(ternary_spec(), "inv_square", 4)
    it = sine_c0_levels(ternary_spec(), "inv_square")
    for _ in range(4):
        b = next(it)
        same = [t for t in pf.terms if t.level == b.step]
        assert len(same) == b.count
        assert (b.template.left, b.template.right, b.template.log_coeff) in {
            (t.left, t.right, t.log_coeff) for t in same
        }


def test_bumpsine_first_coefficient(bumpsine6):
    t = bumpsine6.terms[[(t.left, t.right) for t in bumpsine6.terms].index((F(1, 3), F(2, 3)))]
    assert t.level == 1 and t.kernel == BUMP_SINE
    assert t.coefficient == pytest.approx(math.exp(-3), rel=1e-15)
    assert eval_point(bumpsine6, F(1, 2)).value == 0.0


def test_bumpsine_numbering_by_decreasing_length(bumpsine6):
    ordered = sorted(bumpsine6.terms, key=lambda t: t.level)
    keys = [(-t.length, t.left) for t in ordered]
    assert keys == sorted(keys)
    for t in ordered:
        assert t.log_coeff == pytest.approx(-2 * math.log(t.level) - float(1 / t.length))


def test_bumpsine_terms_take_both_signs(bumpsine6):
    for t in bumpsine6.terms[:40]:
        xs = float(t.left) + float(t.length) * np.linspace(0.05, 0.95, 64)
        # values sit far below the float range, so read the signs in log space
        s = signed_log(bumpsine6, xs, 0)[0][0]
        assert (s > 0).any() and (s < 0).any()


def test_prescribed_depth_three_parity(ternary):
    pf = build_prescribed_cutset(ternary, 3)
    assert len(pf.terms) == 7
    for t in pf.terms:
        assert t.sign == (-1 if t.level % 2 else 1)
    assert {t.level: t.sign for t in pf.terms} == {0: 1, 1: -1, 2: 1}


def test_prescribed_coefficient_example(ternary):
    pf = build_prescribed_cutset(ternary, 3)
    top = next(t for t in pf.terms if t.level == 0)
    assert top.length == F(1, 3) and top.index == 1
    assert top.coefficient == pytest.approx(0.5 * math.exp(-3), rel=1e-14)


def test_empty_perfect_part():
    vs = validate_spec(SetSpec((PointClusterSpec("finite", (F(1, 2),)),)), 4)
    pf = build_prescribed_cutset(vs, 4)
    assert [(t.left, t.right) for t in pf.terms] == [(0, F(1, 2)), (F(1, 2), 1)]
    assert pf.terms[0].sign == -pf.terms[1].sign
    assert check_invariants(pf) == []


def test_finite_block_alternates():
    vs = validate_spec(
        SetSpec((CentralCantorSpec(ternary_rule()), PointClusterSpec("finite", (F(4, 9), F(5, 9))))), 4
    )
    pf = build_prescribed_cutset(vs, 3)
    row = [t for t in pf.terms if t.gap == ""]
    assert [t.sign for t in row] == [1, -1, 1]


def test_zeta_block_anchor_at_midpoint():
    vs = validate_spec(
        SetSpec(
            (
                CentralCantorSpec(ternary_rule()),
                PointClusterSpec("geometric", limit=F(5, 12), offset=F(1, 48), ratio=F(1, 2), direction="right"),
                PointClusterSpec("geometric", limit=F(7, 12), offset=F(1, 48), ratio=F(1, 2), direction="left"),
            )
        ),
        6,
    )
    gt = build_gap_tree(vs, 3)
    ct = build_component_table(gt, vs, budget=16)
    sa = assign_signs(gt, ct)
    blk = [c for c in ct.rows[""].components if c.block == 1]
    anchor = next(c for c in blk if c.position == 0)
    assert anchor.left <= F(1, 2) <= anchor.right
    assert sa[anchor.ref] == 1
    for c in blk:
        if abs(c.position) == 1:
            assert sa[c.ref] == -1
        if abs(c.position) == 2:
            assert sa[c.ref] == 1


def test_reverse_omega_block_ends_positive(mixed8):
    ct = mixed8.components
    row = ct.rows[""]
    right_blk = [c for c in row.components if c.block == 1]
    last = max(right_blk, key=lambda c: c.left)
    assert last.right == F(2, 3) and mixed8.signs[last.ref] == 1
    left_blk = [c for c in row.components if c.block == 0]
    first = min(left_blk, key=lambda c: c.left)
    assert first.left == F(1, 3) and mixed8.signs[first.ref] == 1


@pytest.mark.parametrize("name", ["prescribed8", "mixed8", "sine8", "bumpsine6"])
def test_invariants_hold(name, request):
    pf = request.getfixturevalue(name)
    assert check_invariants(pf) == []
    for a, b in zip(pf.terms, pf.terms[1:]):
        assert a.right <= b.left


def test_shared_endpoints_alternate_exhaustively(mixed8):
    by_right = {t.right: t for t in mixed8.terms}
    shared = [t for t in mixed8.terms if t.left in by_right]
    assert shared
    assert all(by_right[t.left].sign == -t.sign for t in shared)


def test_bad_terms_rejected():
    with pytest.raises(ValueError):
        SignedBumpTerm(F(1, 2), F(1, 3), 1, 0.0, BUMP, 0)
    with pytest.raises(ValueError):
        SignedBumpTerm(F(0), F(1, 3), 0, 0.0, BUMP, 0)
    with pytest.raises(ValueError):
        SignedBumpTerm(F(0), F(1, 3), 1, 0.0, "cosine", 0)
