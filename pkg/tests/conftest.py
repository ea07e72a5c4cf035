from fractions import Fraction as F

import pytest

from cutset.builder import build_bump_sine_cinf, build_prescribed_cutset, build_sine_c0
from cutset.sets import AlphaRule, CentralCantorSpec, PointClusterSpec, SetSpec, ternary_rule, validate_spec


def ternary_spec() -> SetSpec:
    return SetSpec((CentralCantorSpec(ternary_rule()),))


def mixed_spec() -> SetSpec:
    """Ternary set, a two-sided geometric cluster at 1/2 and the isolated points 1/6, 5/6."""
    return SetSpec(
        (
            CentralCantorSpec(ternary_rule()),
            PointClusterSpec("geometric", limit=F(1, 2), offset=F(1, 12), ratio=F(1, 2), direction="both"),
            PointClusterSpec("finite", (F(1, 6), F(5, 6))),
        )
    )


@pytest.fixture(scope="session")
def ternary():
    return validate_spec(ternary_spec(), 8)


@pytest.fixture(scope="session")
def mixed():
    return validate_spec(mixed_spec(), 8)


@pytest.fixture(scope="session")
def half_cantor():
    return validate_spec(SetSpec((CentralCantorSpec(AlphaRule(F(1, 2))),)), 12)


@pytest.fixture(scope="session")
def prescribed8(ternary):
    return build_prescribed_cutset(ternary, 8)


@pytest.fixture(scope="session")
def mixed8(mixed):
    return build_prescribed_cutset(mixed, 8)


@pytest.fixture(scope="session")
def sine8():
    return build_sine_c0(ternary_spec(), "inv_square", 8)


@pytest.fixture(scope="session")
def bumpsine6():
    return build_bump_sine_cinf(ternary_spec(), 6)
