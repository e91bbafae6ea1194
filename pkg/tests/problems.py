"""Test problems with certified solutions, shared by solver and acceptance tests."""

import math
from functools import partial

import numpy as np

from oracles import l1_quadratic_kkt
from ppds.convex import CompositeProblem, EqualityConstrainedL1, to_inclusion
from ppds.operators import LinearMap, make_affine_projector, prox_l1_quadratic
from ppds.solver import Accelerated, linear_rate_params, solve


def _shift(b, u, gamma):
    return u - gamma * b


def _l1q(a, sigma, weight, x, t):
    return prox_l1_quadratic(a, sigma, t, x, weight)


def strongly_convex_l1(N=20, r=5, m_proj=2, seed=0, rho=1.0, tau0=1.0):
    """min |x|_1 + rho/2 |x - a|^2 s.t. Lx = b, projecting on the first m_proj rows.

    Returns ``(problem, schedule, x_hat, u_hat, L)`` with the solution certified
    by exact active-set refinement.
    """
    rng = np.random.default_rng(seed)
    L = rng.standard_normal((r, N))
    a = 2 * rng.standard_normal(N)
    b = L @ rng.standard_normal(N)
    Lm = LinearMap.from_matrix(L)
    T = make_affine_projector(L[:m_proj], b[:m_proj]) if m_proj else None
    problem = to_inclusion(CompositeProblem(
        L=Lm, prox_f=partial(_l1q, a, rho, 1.0), rho=rho,
        prox_gconj=partial(_shift, b), X_proj=T))
    schedule = Accelerated.with_equality(tau0, rho, Lm.norm_bound)
    warm = solve(problem, schedule, tol=0, max_iter=3000)
    x_hat, u_hat = l1_quadratic_kkt(L, b, a, rho=rho, u_start=warm.final_u,
                                    x_start=warm.final_x)
    assert np.abs(L @ x_hat - b).max() < 1e-12
    z = a - L.T @ u_hat / rho
    assert np.abs(x_hat - np.sign(z) * np.maximum(np.abs(z) - 1 / rho, 0)).max() < 1e-12
    return problem, schedule, x_hat, u_hat, L


def linear_rate_problem(N=20, r=8, L_norm=40.0, seed=0, theta=1.0):
    """f = |x|_1 + 1/2|x - a|^2 and g* = 1/2|u|_1 + 1/2|u - e|^2, so rho = chi = 1.

    ``(x_hat, u_hat)`` comes from a long run and is certified as a fixed point
    of the resolvent equations to 1e-14.
    """
    rng = np.random.default_rng(seed)
    L = rng.standard_normal((r, N))
    L *= L_norm / np.linalg.norm(L, 2)
    a = 2 * rng.standard_normal(N)
    e = 2 * rng.standard_normal(r)
    Lm = LinearMap.from_matrix(L)
    prox_f = partial(_l1q, a, 1.0, 1.0)
    prox_gc = partial(_l1q, e, 1.0, 0.5)
    problem = to_inclusion(CompositeProblem(L=Lm, prox_f=prox_f, rho=1.0,
                                            prox_gconj=prox_gc, chi=1.0))
    schedule = linear_rate_params(1.0, 1.0, math.inf, math.inf, Lm.norm_bound, theta)
    rep = solve(problem, schedule, tol=0, max_iter=20_000)
    x_hat, u_hat = rep.final_x, rep.final_u
    for t in (0.5, 1.0):
        assert np.abs(x_hat - prox_f(x_hat - t * L.T @ u_hat, t)).max() < 1e-14
        assert np.abs(u_hat - prox_gc(u_hat + t * L @ x_hat, t)).max() < 1e-14
    return problem, schedule, x_hat, u_hat, L


def random_l1_instance(N, m, n, seed):
    """Feasible instance with Gaussian data (generated from a dense point)."""
    rng = np.random.default_rng(seed)
    R = rng.standard_normal((m, N))
    S = rng.standard_normal((n, N))
    x = rng.standard_normal(N)
    return EqualityConstrainedL1(R, S, R @ x, S @ x)


def l1_multiplier(inst, x_hat):
    """Multiplier u with -L^T u in d|x_hat|_1, from the square support system."""
    L = inst.L
    support = np.abs(x_hat) > 1e-9
    assert support.sum() == L.shape[0], "need a nondegenerate vertex"
    u = np.linalg.solve(L[:, support].T, -np.sign(x_hat[support]))
    assert np.abs(L.T @ u).max() <= 1 + 1e-9
    return u
