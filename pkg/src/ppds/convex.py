"""Convex-optimization front-end and the equality-constrained l1 application.

A composite problem ``min f(x) + (g [] l)(L x) + h(x)`` over ``x in Fix T``
is mapped onto an :class:`~ppds.solver.InclusionProblem` with
``A = df``, ``B = dg``, ``C = grad h`` and ``D^-1 = grad l*``.

The application ``min ||x||_1 s.t. R x = c, S x = d`` is solved two ways:
PCP projects every primal iterate onto ``{R x = c}``; CP is the plain
primal-dual method with both constraints enforced only through the
multiplier.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import partial
from typing import Callable, Optional

import numpy as np

from ppds.linalg import as_matrix, as_vector, spd_factor
from ppds.operators import (
    CocoerciveOp,
    FixedPointMap,
    LinearMap,
    MonotoneOp,
    make_affine_projector,
    prox_conjugate,
    soft_threshold,
)
from ppds.solver import InclusionProblem, Static, solve

TAU_FACTOR = 0.99


class Degenerate(ValueError):
    """The l1 minimizer is not unique; the oracle declines."""


@dataclass(frozen=True)
class CompositeProblem:
    """``min f(x) + (g [] l)(L x) + h(x)`` with a priori sets ``X`` and ``V``.

    ``prox_f(v, t)`` and ``prox_g(v, t)`` return ``prox_{t f}(v)`` and
    ``prox_{t g}(v)``. When the prox of ``g*`` is known in closed form it can
    be passed as ``prox_gconj`` instead of ``prox_g``. ``rho`` is the strong
    convexity of ``f``, ``chi`` that of ``g*``; ``beta`` is the inverse
    Lipschitz constant of ``grad_h`` and ``delta`` the cocoercivity modulus of
    ``grad_lstar``.
    """

    L: LinearMap
    prox_f: Callable[[np.ndarray, float], np.ndarray]
    prox_g: Optional[Callable[[np.ndarray, float], np.ndarray]] = None
    prox_gconj: Optional[Callable[[np.ndarray, float], np.ndarray]] = None
    rho: float = 0.0
    chi: float = 0.0
    grad_h: Optional[Callable[[np.ndarray], np.ndarray]] = None
    beta: float = math.inf
    grad_lstar: Optional[Callable[[np.ndarray], np.ndarray]] = None
    delta: float = math.inf
    X_proj: Optional[FixedPointMap] = None
    V_proj: Optional[FixedPointMap] = None

    def __post_init__(self):
        if (self.prox_g is None) == (self.prox_gconj is None):
            raise ValueError("give exactly one of prox_g and prox_gconj")
        if self.grad_h is None and self.beta != math.inf:
            raise ValueError("beta is only meaningful with grad_h")
        if self.grad_lstar is None and self.delta != math.inf:
            raise ValueError("delta is only meaningful with grad_lstar")


def _conj_resolvent(prox_g, u, gamma):
    return prox_conjugate(prox_g, gamma, u)


def to_inclusion(p):
    """Assemble the inclusion problem whose iteration is the composite method."""
    if p.prox_gconj is not None:
        binv = MonotoneOp(p.prox_gconj, p.chi)
    else:
        binv = MonotoneOp(partial(_conj_resolvent, p.prox_g), p.chi)
    T = p.X_proj if p.X_proj is not None else FixedPointMap.identity(p.L.in_dim)
    V = p.V_proj if p.V_proj is not None else FixedPointMap.identity(p.L.out_dim)
    return InclusionProblem(
        A=MonotoneOp(p.prox_f, p.rho),
        Binv=binv,
        C=CocoerciveOp(p.grad_h, p.beta) if p.grad_h is not None else CocoerciveOp.zero(),
        Dinv=(CocoerciveOp(p.grad_lstar, p.delta) if p.grad_lstar is not None
              else CocoerciveOp.zero()),
        L=p.L,
        T=T,
        PV=V,
    )


# --- equality-constrained l1 ----------------------------------------------


@dataclass(frozen=True)
class EqualityConstrainedL1:
    """``min ||x||_1`` subject to ``R x = c`` and ``S x = d``."""

    R: np.ndarray
    S: np.ndarray
    c: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        R = as_matrix(np.atleast_2d(self.R), "R")
        N = R.shape[1]
        S = np.asarray(self.S, dtype=float)
        if S.size == 0:
            S = np.zeros((0, N))
        S = as_matrix(S, "S")
        c = as_vector(np.atleast_1d(self.c), "c")
        d = np.asarray(self.d, dtype=float).reshape(-1)
        if S.shape[1] != N:
            raise ValueError("R and S must have the same number of columns")
        if c.shape[0] != R.shape[0] or d.shape[0] != S.shape[0]:
            raise ValueError("right-hand sides do not match the constraint blocks")
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)

    @property
    def N(self):
        return self.R.shape[1]

    @property
    def L(self):
        return np.vstack([self.R, self.S])

    @property
    def b(self):
        return np.concatenate([self.c, self.d])


def _l1_prox(x, t):
    return soft_threshold(x, t)


def _shift_resolvent(b, u, gamma):
    return u - gamma * b


def _build(inst, gamma, project, L_norm=None, seed=0):
    L = LinearMap.from_matrix(inst.L, norm=L_norm, seed=seed)
    tau = TAU_FACTOR / (gamma * L.norm_bound**2)
    if project == "R":
        T = make_affine_projector(inst.R, inst.c, spd_factor(inst.R @ inst.R.T))
    elif project == "S":
        T = make_affine_projector(inst.S, inst.d, spd_factor(inst.S @ inst.S.T))
    elif project is None:
        T = FixedPointMap.identity(inst.N)
    else:
        raise ValueError(f"project must be 'R', 'S' or None, got {project!r}")
    problem = CompositeProblem(
        L=L,
        prox_f=_l1_prox,
        prox_gconj=partial(_shift_resolvent, inst.b),
        X_proj=T,
    )
    return to_inclusion(problem), Static(tau, gamma, 1.0)


def pcp_build(inst, gamma, project="R", L_norm=None):
    """Projected method: ``T`` is the projector onto one constraint block.

    The step sizes are ``tau = 0.99/(gamma ||L||^2)``, ``theta = 1``.
    """
    if project is None:
        raise ValueError("PCP projects onto 'R' or 'S'")
    return _build(inst, gamma, project, L_norm)


def cp_build(inst, gamma, L_norm=None):
    """Unprojected baseline: ``T`` and ``P_V`` are the identity."""
    return _build(inst, gamma, None, L_norm)


def pcp_solve(inst, gamma, tol=1e-5, max_iter=1_000_000, project="R", L_norm=None, **kw):
    problem, schedule = pcp_build(inst, gamma, project, L_norm)
    return solve(problem, schedule, tol=tol, max_iter=max_iter, **kw)


def cp_solve(inst, gamma, tol=1e-5, max_iter=1_000_000, L_norm=None, **kw):
    problem, schedule = cp_build(inst, gamma, L_norm)
    return solve(problem, schedule, tol=tol, max_iter=max_iter, **kw)


# --- exact small-scale oracle ---------------------------------------------


def l1_lp_oracle(inst, tie_tol=1e-9, chunk=20000):
    """Exact minimizer of ``||x||_1`` s.t. ``L x = b`` by vertex enumeration.

    With ``x = x+ - x-`` the problem is a standard-form LP in ``(x+, x-)``.
    A basis can never hold both columns of one coordinate (they are
    negatives of each other), so basic feasible solutions correspond to
    supports ``I`` of size ``rank L`` with ``L_I`` nonsingular and
    ``x_I = L_I^{-1} b``; the signs then fix the split. Every such support is
    enumerated.

    Raises
    ------
    Degenerate
        If two distinct vertices attain the minimum within ``tie_tol``.
    """
    L = inst.L
    b = inst.b
    r, N = L.shape
    if N > 24 or r > 12:
        raise ValueError("oracle is limited to N <= 24 and m + n <= 12")
    if np.linalg.matrix_rank(L) < r:
        raise ValueError("constraint matrix must have full row rank")

    supports = itertools.combinations(range(N), r)
    best_val = math.inf
    best = []
    col_norms = np.linalg.norm(L, axis=0)
    while True:
        block = np.array(list(itertools.islice(supports, chunk)), dtype=np.intp)
        if block.size == 0:
            break
        sub = L[:, block].transpose(1, 0, 2)  # (batch, r, r)
        det = np.abs(np.linalg.det(sub))
        hadamard = np.prod(col_norms[block], axis=1)
        ok = det > 1e-10 * hadamard
        if not np.any(ok):
            continue
        block, sub = block[ok], sub[ok]
        xs = np.linalg.solve(sub, np.broadcast_to(b, (len(sub), r))[..., None])[..., 0]
        resid = np.max(np.abs(np.einsum("kij,kj->ki", sub, xs) - b), axis=1)
        good = resid <= 1e-9 * (1.0 + np.max(np.abs(b)))
        vals = np.abs(xs).sum(axis=1)
        for idx in np.flatnonzero(good & (vals <= best_val + tie_tol)):
            v = vals[idx]
            x = np.zeros(N)
            x[block[idx]] = xs[idx]
            if v < best_val - tie_tol:
                best_val = v
                best = [x]
            else:
                if v < best_val:
                    best_val = v
                best.append(x)
            best = [y for y in best if np.abs(y).sum() <= best_val + tie_tol]
    if not best:
        raise ValueError("no feasible vertex found")
    x0 = best[0]
    for y in best[1:]:
        if np.max(np.abs(y - x0)) > tie_tol:
            raise Degenerate("l1 minimizer is not unique")
    return x0
