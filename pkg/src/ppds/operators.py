"""Operator classes consumed by the splitting iteration.

Set-valued maximally monotone operators are carried by their resolvents,
cocoercive operators by their evaluation map. Concrete proximity operators
and projectors used by the constrained l1 application live here as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.linalg.lapack import dtrtrs

from ppds.linalg import as_matrix, as_vector, operator_norm, spd_factor, spd_solve

Resolvent = Callable[[np.ndarray, float], np.ndarray]


class NotOrthonormal(ValueError):
    pass


def _identity_resolvent(x, step):
    return x


@dataclass(frozen=True)
class MonotoneOp:
    """Maximally monotone operator given through ``resolvent(x, step)``.

    ``resolvent(x, g)`` must return ``J_{gM}(x) = (Id + g M)^{-1} x``.
    ``strong_modulus`` is the strong-monotonicity constant (0 if none).
    """

    resolvent: Resolvent = _identity_resolvent
    strong_modulus: float = 0.0

    def __post_init__(self):
        if self.strong_modulus < 0:
            raise ValueError("strong_modulus must be nonnegative")

    @classmethod
    def zero(cls):
        return cls(_identity_resolvent, 0.0)


@dataclass(frozen=True)
class CocoerciveOp:
    """Single-valued ``modulus``-cocoercive operator.

    ``modulus = inf`` with ``eval=None`` encodes the zero operator; the solver
    skips evaluation entirely in that case.
    """

    eval: Optional[Callable[[np.ndarray], np.ndarray]] = None
    modulus: float = math.inf

    def __post_init__(self):
        if not self.modulus > 0:
            raise ValueError("cocoercivity modulus must be positive")
        if self.eval is None and self.modulus != math.inf:
            raise ValueError("the zero operator has modulus inf")

    @property
    def is_zero(self):
        return self.eval is None

    def __call__(self, x):
        if self.eval is None:
            return np.zeros_like(x)
        return self.eval(x)

    @classmethod
    def zero(cls):
        return cls(None, math.inf)


@dataclass(frozen=True)
class LinearMap:
    forward: Callable[[np.ndarray], np.ndarray]
    adjoint: Callable[[np.ndarray], np.ndarray]
    norm_bound: float
    in_dim: int
    out_dim: int

    @classmethod
    def from_matrix(cls, M, norm=None, seed=0):
        """Wrap a dense matrix; the norm is estimated by power iteration if absent."""
        M = as_matrix(M)
        if norm is None:
            norm = operator_norm(M, seed=seed) if M.size else 0.0
        Mt = np.ascontiguousarray(M.T)
        return cls(M.dot, Mt.dot, float(norm), M.shape[1], M.shape[0])

    @classmethod
    def zero(cls, in_dim, out_dim):
        def fwd(x):
            return np.zeros(out_dim)

        def adj(u):
            return np.zeros(in_dim)

        return cls(fwd, adj, 0.0, in_dim, out_dim)


@dataclass(frozen=True)
class FixedPointMap:
    """Averaged quasi-nonexpansive map ``T`` with nonempty fixed-point set.

    ``known_fixed_point`` exists only so tests can check the averaged
    inequality; the solver never reads it. ``is_projector`` marks maps with
    ``T(T(x)) == T(x)``.
    """

    apply: Callable[[np.ndarray], np.ndarray]
    averagedness: float = 0.5
    known_fixed_point: Optional[np.ndarray] = None
    is_projector: bool = True
    is_identity: bool = False

    def __post_init__(self):
        if not 0 < self.averagedness < 1:
            raise ValueError("averagedness must lie in (0, 1)")

    def __call__(self, x):
        return self.apply(x)

    @classmethod
    def identity(cls, dim=None):
        fp = None if dim is None else np.zeros(dim)
        return cls(lambda x: x, 0.5, fp, True, True)


# --- proximity operators --------------------------------------------------


def soft_threshold(x, t):
    """prox of ``t*||.||_1``: componentwise ``sign(x) * max(|x| - t, 0)``."""
    if not t > 0:
        raise ValueError("threshold must be positive")
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def prox_conjugate(prox_g, gamma, x):
    """``prox_{gamma g*}(x)`` from ``prox_g(v, t) = prox_{t g}(v)`` via Moreau."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    x = np.asarray(x, dtype=float)
    return x - gamma * prox_g(x / gamma, 1.0 / gamma)


def point_indicator_conj_prox(b, gamma, u):
    """prox of ``gamma * iota_{b}^*``, which is the shift ``u - gamma*b``."""
    b = np.asarray(b, dtype=float)
    u = np.asarray(u, dtype=float)
    if b.shape != u.shape:
        raise ValueError(f"dimension mismatch: b {b.shape}, u {u.shape}")
    return u - gamma * b


def prox_scaled_quadratic(a, sigma, t, x):
    """prox of ``t * (sigma/2) ||. - a||^2``."""
    if not (sigma > 0 and t > 0):
        raise ValueError("sigma and t must be positive")
    ts = t * sigma
    return (np.asarray(x, dtype=float) + ts * np.asarray(a, dtype=float)) / (1.0 + ts)


def prox_l1_quadratic(a, sigma, t, x, weight=1.0):
    """prox of ``t * (weight*||.||_1 + (sigma/2)||. - a||^2)`` in closed form."""
    ts = t * sigma
    return soft_threshold((np.asarray(x, dtype=float) + ts * np.asarray(a)) / (1.0 + ts),
                          t * weight / (1.0 + ts))


# --- projectors -----------------------------------------------------------


def make_affine_projector(R, c, factor=None):
    """Projector onto ``{x : R x = c}``: ``x - R^T (R R^T)^{-1} (R x - c)``.

    ``factor`` is an :class:`SpdFactor` of ``R R^T``; it is computed here
    when omitted.
    """
    R = as_matrix(R, "R")
    c = as_vector(c, "c")
    if c.shape[0] != R.shape[0]:
        raise ValueError(f"c has {c.shape[0]} entries, R has {R.shape[0]} rows")
    if factor is None:
        factor = spd_factor(R @ R.T)
    if factor.dim != R.shape[0]:
        raise ValueError("factor does not match R R^T")
    Rt = np.ascontiguousarray(R.T)
    lower = factor.lower
    upper = np.ascontiguousarray(lower.T)

    # raw LAPACK: scipy's solve_triangular wrapper costs more than the solve here
    def apply(x):
        y, _ = dtrtrs(lower, R.dot(x) - c, lower=1)
        z, _ = dtrtrs(upper, y, lower=0)
        return x - Rt.dot(z)

    x0 = Rt.dot(spd_solve(factor, c))
    return FixedPointMap(apply, 0.5, x0, True, False)


@dataclass(frozen=True)
class FullSpace:
    pass


@dataclass(frozen=True)
class OrthonormalBasis:
    Q: np.ndarray


def make_subspace_projector(spec):
    """Projector onto a closed subspace: the whole space or ``range(Q)``."""
    if isinstance(spec, FullSpace):
        return FixedPointMap.identity()
    Q = as_matrix(spec.Q, "Q")
    k = Q.shape[1]
    if np.max(np.abs(Q.T @ Q - np.eye(k)), initial=0.0) > 1e-10:
        raise NotOrthonormal("basis columns are not orthonormal to 1e-10")
    Qt = np.ascontiguousarray(Q.T)

    def apply(x):
        return Q.dot(Qt.dot(x))

    return FixedPointMap(apply, 0.5, np.zeros(Q.shape[0]), True, False)
