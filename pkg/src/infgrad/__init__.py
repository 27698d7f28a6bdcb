"""Variational analysis at infinity: cones, subgradients and optimality checks.

The package computes Clarke tangent/normal cones at infinity of unbounded
sets, subgradient sets at infinity of scalar functions, classifies Lipschitz
behaviour at infinity, and checks necessary optimality conditions for
problems whose infimum escapes to infinity.  Exact polyhedral engines cover
piecewise-affine data in low dimension; deterministic sampling ladders cover
everything else.
"""

__version__ = "0.1.0"

from .errors import (
    CapabilityError,
    DimensionMismatchError,
    EstimateUnavailableError,
    EvaluationError,
    InconclusiveError,
    InfeasibleSetError,
    InfgradError,
    ParseError,
)
from .extreal import NEG_INF, POS_INF, ExtendedReal, ext, ext_add, ext_inf, ext_mul, ext_sup
from .geometry import (
    MinkowskiCertificate,
    PolyCone,
    PolyConvexSet,
    Tolerance,
    convex_hull,
    minkowski_contains_zero,
    polar_cone,
    set_eq,
    support_function,
)

__all__ = [
    "CapabilityError",
    "DimensionMismatchError",
    "EstimateUnavailableError",
    "EvaluationError",
    "ExtendedReal",
    "InconclusiveError",
    "InfeasibleSetError",
    "InfgradError",
    "MinkowskiCertificate",
    "NEG_INF",
    "POS_INF",
    "ParseError",
    "PolyCone",
    "PolyConvexSet",
    "Tolerance",
    "convex_hull",
    "ext",
    "ext_add",
    "ext_inf",
    "ext_mul",
    "ext_sup",
    "minkowski_contains_zero",
    "polar_cone",
    "set_eq",
    "support_function",
]
