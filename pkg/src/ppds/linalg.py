"""Dense real linear-algebra kernels.

Everything here is a pure function of its inputs. Matrices are 2-D float
arrays, vectors 1-D float arrays; non-finite data is rejected at the door.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular


class NotSpd(np.linalg.LinAlgError):
    """Cholesky failed for every jitter level in the escalation schedule."""


class NotSymmetric(ValueError):
    pass


class NoConvergence(RuntimeError):
    pass


def as_vector(v, name="v"):
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


def as_matrix(M, name="M"):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains non-finite entries")
    return M


def matvec(M, v):
    """Dense product ``M @ v`` with shape checking."""
    M = as_matrix(M)
    v = as_vector(v)
    if M.shape[1] != v.shape[0]:
        raise ValueError(f"dimension mismatch: M is {M.shape}, v has {v.shape[0]}")
    return M @ v


def adjoint_matvec(M, v):
    """Dense product ``M.T @ v`` with shape checking."""
    M = as_matrix(M)
    v = as_vector(v)
    if M.shape[0] != v.shape[0]:
        raise ValueError(f"dimension mismatch: M is {M.shape}, v has {v.shape[0]}")
    return M.T @ v


@dataclass(frozen=True)
class JitterPolicy:
    """Diagonal-jitter escalation for near-singular SPD matrices.

    The first attempt is always unjittered. Retry ``i`` (1-based) adds
    ``initial * growth**(i-1) * trace(M)/dim`` to the diagonal.
    """

    initial: float = 1e-12
    growth: float = 10.0
    max_tries: int = 5


@dataclass(frozen=True)
class SpdFactor:
    lower: np.ndarray
    jitter_used: float = 0.0

    @property
    def dim(self):
        return self.lower.shape[0]

    def reconstruct(self):
        return self.lower @ self.lower.T


def spd_factor(M, jitter_policy=JitterPolicy()):
    """Cholesky factor of ``M + jitter*I`` for the smallest workable jitter.

    Raises
    ------
    NotSymmetric
        If ``M`` is not square or its relative asymmetry exceeds 1e-12.
    NotSpd
        If every jitter level in ``jitter_policy`` fails.
    """
    M = as_matrix(M)
    n, m = M.shape
    if n != m:
        raise NotSymmetric(f"matrix must be square, got {M.shape}")
    scale = np.linalg.norm(M)
    if np.linalg.norm(M - M.T) > 1e-12 * max(scale, np.finfo(float).tiny):
        raise NotSymmetric("matrix is not symmetric to 1e-12 relative")
    M = 0.5 * (M + M.T)

    base = abs(np.trace(M)) / n
    if base == 0.0:
        base = 1.0
    levels = [0.0] + [
        jitter_policy.initial * jitter_policy.growth**i * base
        for i in range(jitter_policy.max_tries)
    ]
    for jitter in levels:
        try:
            lower = np.linalg.cholesky(M + jitter * np.eye(n))
        except np.linalg.LinAlgError:
            continue
        if np.all(np.isfinite(lower)) and np.all(np.diag(lower) > 0):
            return SpdFactor(lower=lower, jitter_used=jitter)
    raise NotSpd(
        f"factorization failed after {jitter_policy.max_tries} jitter escalations"
    )


def spd_solve(F, b):
    """Solve ``(M + jitter*I) x = b`` by forward then back substitution."""
    b = as_vector(b, "b")
    if b.shape[0] != F.dim:
        raise ValueError(f"dimension mismatch: factor is {F.dim}, b has {b.shape[0]}")
    y = solve_triangular(F.lower, b, lower=True, check_finite=False)
    return solve_triangular(F.lower.T, y, lower=False, check_finite=False)


def operator_norm(M, tol=1e-9, max_iter=5000, seed=0):
    """Spectral norm of ``M`` by power iteration on ``M.T @ M``.

    The start vector is drawn from ``numpy.random.default_rng(seed)`` so the
    result is bit-for-bit reproducible. Iteration stops once the Rayleigh
    quotient changes by at most ``tol`` relative.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    M = as_matrix(M)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(M.shape[1])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = M.T @ (M @ v)
        lam_new = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        if abs(lam_new - lam) <= tol * lam_new:
            # one more quotient at the normalized iterate, never below the last
            lam = max(lam_new, float(np.linalg.norm(M @ v) ** 2))
            return float(np.sqrt(lam))
        lam = lam_new
    raise NoConvergence(f"power iteration did not reach tol={tol} in {max_iter} steps")
