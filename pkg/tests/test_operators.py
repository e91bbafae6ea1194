import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import l1_scalar_prox
from ppds.operators import (
    CocoerciveOp,
    FixedPointMap,
    FullSpace,
    LinearMap,
    MonotoneOp,
    NotOrthonormal,
    OrthonormalBasis,
    make_affine_projector,
    make_subspace_projector,
    point_indicator_conj_prox,
    prox_conjugate,
    prox_l1_quadratic,
    prox_scaled_quadratic,
    soft_threshold,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def l1_prox(v, t):
    return soft_threshold(v, t)


def test_soft_threshold_examples():
    np.testing.assert_array_equal(soft_threshold(np.zeros(3), 1.0), np.zeros(3))
    np.testing.assert_array_equal(soft_threshold([2.0, -0.5, 1.0], 1.0), [1.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        soft_threshold([1.0], 0.0)


def test_soft_threshold_matches_scalar_minimization():
    rng = np.random.default_rng(2)
    for _ in range(20):
        x = rng.standard_normal(8) * 3
        t = rng.uniform(0.01, 3)
        expected = [l1_scalar_prox(xi, t) for xi in x]
        np.testing.assert_allclose(soft_threshold(x, t), expected, rtol=0, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(arrays(float, 6, elements=finite), arrays(float, 6, elements=finite),
       st.floats(1e-3, 10))
def test_soft_threshold_nonexpansive(x, y, t):
    d = np.linalg.norm(soft_threshold(x, t) - soft_threshold(y, t))
    assert d <= np.linalg.norm(x - y) + 1e-10


def test_prox_conjugate_of_l1_is_clipping():
    for gamma in (0.1, 1.0, 7.0):
        out = prox_conjugate(l1_prox, gamma, np.array([2.0, -3.0, 0.5]))
        np.testing.assert_allclose(out, [1.0, -1.0, 0.5], rtol=0, atol=1e-12)


def test_prox_conjugate_of_zero_is_zero():
    out = prox_conjugate(lambda v, t: v, 0.3, np.array([1.0, -2.0]))
    np.testing.assert_allclose(out, 0.0, atol=1e-15)


def test_prox_conjugate_of_quadratic_closed_form():
    # g = s/2 |. - a|^2, g*(u) = |u|^2/(2s) + <a, u>,
    # prox_{gamma g*}(x) = s (x - gamma a)/(s + gamma)
    rng = np.random.default_rng(4)
    for _ in range(20):
        a = rng.standard_normal(5)
        s = rng.uniform(0.1, 5)
        gamma = rng.uniform(0.1, 5)
        x = rng.standard_normal(5)
        expected = s * (x - gamma * a) / (s + gamma)
        got = prox_conjugate(lambda v, t: prox_scaled_quadratic(a, s, t, v), gamma, x)
        np.testing.assert_allclose(got, expected, rtol=0, atol=1e-12)


def test_moreau_identity_l1():
    rng = np.random.default_rng(8)
    for _ in range(50):
        x = rng.standard_normal(7) * 2
        gamma = rng.uniform(0.05, 5)
        lhs = prox_conjugate(l1_prox, gamma, x) + gamma * soft_threshold(x / gamma, 1 / gamma)
        np.testing.assert_allclose(lhs, x, rtol=0, atol=1e-12)


def test_point_indicator_conj_prox():
    u = np.array([1.0, 1.0])
    np.testing.assert_array_equal(point_indicator_conj_prox(np.zeros(2), 0.5, u), u)
    np.testing.assert_array_equal(point_indicator_conj_prox([1.0, 2.0], 0.5, u), [0.5, 0.0])
    with pytest.raises(ValueError):
        point_indicator_conj_prox([1.0], 0.5, u)


@settings(max_examples=50, deadline=None)
@given(arrays(float, 4, elements=finite), arrays(float, 4, elements=finite),
       arrays(float, 4, elements=finite), st.floats(1e-3, 10))
def test_point_indicator_commutes_with_translation(b, u, w, gamma):
    lhs = point_indicator_conj_prox(b, gamma, u + w)
    rhs = point_indicator_conj_prox(b, gamma, u) + w
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-9)


def test_prox_scaled_quadratic_examples():
    a = np.array([1.0, -2.0])
    np.testing.assert_allclose(prox_scaled_quadratic(a, 3.0, 0.7, a), a)
    x = np.array([5.0, 6.0])
    np.testing.assert_allclose(prox_scaled_quadratic(a, 1e-12, 1.0, x), x, atol=1e-10)
    np.testing.assert_allclose(prox_scaled_quadratic(np.zeros(1), 1.0, 1.0, [2.0]), [1.0])


def test_prox_l1_quadratic_minimizes():
    rng = np.random.default_rng(9)
    a = rng.standard_normal(4)
    x = rng.standard_normal(4)
    t, s = 0.7, 2.0
    z = prox_l1_quadratic(a, s, t, x)

    def obj(y):
        return t * (np.abs(y).sum() + s / 2 * np.sum((y - a) ** 2)) + 0.5 * np.sum((y - x) ** 2)

    for _ in range(2000):
        assert obj(z) <= obj(z + 1e-3 * rng.standard_normal(4)) + 1e-14


def _firmly_nonexpansive(J, dim, rng, gammas=(0.1, 1.0, 5.0), samples=100):
    for i in range(samples):
        g = gammas[i % len(gammas)]
        x, y = rng.standard_normal(dim) * 3, rng.standard_normal(dim) * 3
        jx, jy = J(x, g), J(y, g)
        assert np.sum((jx - jy) ** 2) <= (jx - jy) @ (x - y) + 1e-10


def test_shipped_resolvents_firmly_nonexpansive():
    rng = np.random.default_rng(10)
    a = rng.standard_normal(5)
    b = rng.standard_normal(5)
    for J in (
        l1_prox,
        lambda v, g: prox_scaled_quadratic(a, 2.0, g, v),
        lambda v, g: prox_l1_quadratic(a, 1.0, g, v),
        lambda v, g: prox_conjugate(l1_prox, g, v),
        lambda v, g: point_indicator_conj_prox(b, g, v),
        MonotoneOp.zero().resolvent,
    ):
        _firmly_nonexpansive(J, 5, rng)


def test_strongly_monotone_resolvent_contracts():
    rng = np.random.default_rng(12)
    a = rng.standard_normal(5)
    rho = 1.5
    for _ in range(100):
        g = rng.uniform(0.1, 3)
        x, y = rng.standard_normal(5), rng.standard_normal(5)
        jx, jy = prox_l1_quadratic(a, rho, g, x), prox_l1_quadratic(a, rho, g, y)
        assert np.linalg.norm(jx - jy) <= np.linalg.norm(x - y) / (1 + g * rho) + 1e-10


def test_cocoercive_gradient():
    rng = np.random.default_rng(13)
    K = rng.standard_normal((4, 6))
    beta = 1 / np.linalg.norm(K, 2) ** 2
    C = CocoerciveOp(lambda x: K.T @ (K @ x), beta)
    for _ in range(100):
        x, y = rng.standard_normal(6), rng.standard_normal(6)
        d = C(x) - C(y)
        assert (x - y) @ d >= beta * d @ d - 1e-10
    z = CocoerciveOp.zero()
    assert z.is_zero and z.modulus == math.inf
    np.testing.assert_array_equal(z(np.ones(3)), np.zeros(3))
    with pytest.raises(ValueError):
        CocoerciveOp(None, 1.0)


def test_linear_map_from_matrix():
    rng = np.random.default_rng(14)
    M = rng.standard_normal((4, 7))
    Lm = LinearMap.from_matrix(M)
    for _ in range(50):
        x, u = rng.standard_normal(7), rng.standard_normal(4)
        lhs = Lm.forward(x) @ u
        assert abs(lhs - x @ Lm.adjoint(u)) <= 1e-12 * (1 + abs(lhs))
        assert np.linalg.norm(Lm.forward(x)) <= Lm.norm_bound * np.linalg.norm(x) + 1e-10


def _check_projector(P, dim, rng, samples=100):
    y = P.known_fixed_point
    alpha = P.averagedness
    for _ in range(samples):
        x = rng.standard_normal(dim) * 5
        Tx = P(x)
        np.testing.assert_allclose(P(Tx), Tx, rtol=0, atol=1e-12 * (1 + np.abs(Tx).max()))
        lhs = np.sum((Tx - y) ** 2)
        rhs = np.sum((x - y) ** 2) - (1 - alpha) / alpha * np.sum((x - Tx) ** 2)
        assert lhs <= rhs + 1e-10 * (1 + rhs)


def test_affine_projector_small():
    P = make_affine_projector(np.array([[1.0, 1.0]]), np.array([1.0]))
    np.testing.assert_allclose(P(np.zeros(2)), [0.5, 0.5], atol=1e-15)
    x = np.array([3.0, -2.0])
    np.testing.assert_allclose(P(x), x, atol=1e-12)


def test_affine_projector_optimality():
    rng = np.random.default_rng(15)
    R = rng.standard_normal((3, 8))
    c = rng.standard_normal(3)
    P = make_affine_projector(R, c)
    x = rng.standard_normal(8)
    z = P(x)
    assert np.abs(R @ z - c).max() <= 1e-10
    # null-space basis from the SVD
    _, _, Vt = np.linalg.svd(R)
    null = Vt[3:].T
    dist = np.linalg.norm(z - x)
    w = rng.standard_normal((10_000, 5)) @ null.T * 0.5
    assert np.all(np.linalg.norm(z + w - x, axis=1) >= dist - 1e-12)


def test_projectors_idempotent_and_averaged():
    rng = np.random.default_rng(16)
    R = rng.standard_normal((3, 8))
    _check_projector(make_affine_projector(R, rng.standard_normal(3)), 8, rng)
    Q, _ = np.linalg.qr(rng.standard_normal((6, 2)))
    _check_projector(make_subspace_projector(OrthonormalBasis(Q)), 6, rng)
    _check_projector(FixedPointMap.identity(4), 4, rng)


def test_subspace_projector_examples():
    P = make_subspace_projector(FullSpace())
    x = np.array([1.0, 2.0])
    np.testing.assert_array_equal(P(x), x)
    P = make_subspace_projector(OrthonormalBasis(np.array([[1.0], [0.0]])))
    np.testing.assert_array_equal(P(np.array([3.0, 4.0])), [3.0, 0.0])
    with pytest.raises(NotOrthonormal):
        make_subspace_projector(OrthonormalBasis(np.array([[2.0], [0.0]])))
