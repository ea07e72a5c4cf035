"""Cutting sets of continuous and smooth functions on [0, 1].

Exact models of closed nowhere dense sets, the constructions of functions whose
sign changes happen exactly on such a set, and numerical checks around them.
"""

__version__ = "0.1.0"

from .sets import (  # noqa: E402
    AlphaRule,
    CentralCantorSpec,
    Membership,
    PointClusterSpec,
    RatioRule,
    SetSpec,
    SpecError,
    HypothesisError,
    ternary_rule,
    validate_spec,
    membership,
    measure,
)
from .builder import (  # noqa: E402
    PiecewiseFunction,
    SignedBumpTerm,
    build_bump_sine_cinf,
    build_prescribed_cutset,
    build_sine_c0,
)
from .evaluator import eval_point, evaluate, tail_bound, term_bound  # noqa: E402

__all__ = [
    "AlphaRule",
    "CentralCantorSpec",
    "HypothesisError",
    "Membership",
    "PiecewiseFunction",
    "PointClusterSpec",
    "RatioRule",
    "SetSpec",
    "SignedBumpTerm",
    "SpecError",
    "build_bump_sine_cinf",
    "build_prescribed_cutset",
    "build_sine_c0",
    "eval_point",
    "evaluate",
    "measure",
    "membership",
    "tail_bound",
    "term_bound",
    "ternary_rule",
    "validate_spec",
]
