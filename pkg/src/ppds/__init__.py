"""Projected primal-dual splitting for constrained monotone inclusions."""

from ppds.linalg import (
    JitterPolicy,
    NoConvergence,
    NotSpd,
    NotSymmetric,
    SpdFactor,
    adjoint_matvec,
    matvec,
    operator_norm,
    spd_factor,
    spd_solve,
)
from ppds.operators import (
    CocoerciveOp,
    FixedPointMap,
    LinearMap,
    MonotoneOp,
    make_affine_projector,
    make_subspace_projector,
    prox_conjugate,
    soft_threshold,
)
from ppds.solver import (
    Accelerated,
    InclusionProblem,
    LinearRate,
    SolveReport,
    Static,
    StepsizeStatus,
    linear_rate_params,
    solve,
    validate_stepsizes,
)

__version__ = "0.1.0"

__all__ = [
    "Accelerated",
    "CocoerciveOp",
    "FixedPointMap",
    "InclusionProblem",
    "JitterPolicy",
    "LinearMap",
    "LinearRate",
    "MonotoneOp",
    "NoConvergence",
    "NotSpd",
    "NotSymmetric",
    "SolveReport",
    "SpdFactor",
    "Static",
    "StepsizeStatus",
    "adjoint_matvec",
    "linear_rate_params",
    "make_affine_projector",
    "make_subspace_projector",
    "matvec",
    "operator_norm",
    "prox_conjugate",
    "soft_threshold",
    "solve",
    "spd_factor",
    "spd_solve",
    "validate_stepsizes",
]
