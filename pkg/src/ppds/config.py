"""JSON problem descriptions for ``ppds solve``.

Schema (all vectors and matrices are nested JSON arrays)::

    {
      "L": [[...], ...],                       # required, dual_dim x primal_dim
      "f": {"kind": "zero" | "l1" | "quadratic" | "l1_quadratic" | "nonneg",
            "weight": 1.0, "sigma": 1.0, "center": [...]},
      "g": {"kind": "zero" | "point" | "l1" | "quadratic" | "conj_l1_quadratic",
            "b": [...], "weight": 1.0, "sigma": 1.0, "center": [...]},
      "h": {"kind": "least_squares", "K": [[...]], "y": [...]},        # optional
      "lstar": {"kind": "quadratic", "sigma": 1.0},                    # optional
      "X": {"kind": "full"} | {"kind": "affine", "R": [[...]], "c": [...]},
      "V": {"kind": "full"} | {"kind": "basis", "Q": [[...]]},
      "schedule": {"kind": "static", "gamma": 1.0, "tau": ..., "theta": 1.0}
                | {"kind": "accelerated", "tau0": 1.0, "rho": ...}
                | {"kind": "linear", "theta": 1.0},
      "stop": {"tol": 1e-8, "max_iter": 100000},
      "init": {"x0": [...], "u0": [...]}
    }

``quadratic`` is ``(sigma/2)||x - center||^2``; ``l1_quadratic`` adds
``weight*||x||_1``. For ``g``, ``point`` is the indicator of ``{b}`` and
``conj_l1_quadratic`` specifies ``g*`` directly (strongly convex with modulus
``sigma``).
"""

from __future__ import annotations

import math
from functools import partial

import numpy as np

from ppds.linalg import as_matrix, operator_norm
from ppds.operators import (
    FixedPointMap,
    LinearMap,
    OrthonormalBasis,
    make_affine_projector,
    make_subspace_projector,
    point_indicator_conj_prox,
    prox_l1_quadratic,
    prox_scaled_quadratic,
    soft_threshold,
)
from ppds.convex import CompositeProblem, to_inclusion
from ppds.solver import Accelerated, Static, linear_rate_params


class ProblemConfigError(ValueError):
    pass


def _vec(spec, key, dim=None, default=None):
    if key not in spec:
        if default is not None:
            return default
        raise ProblemConfigError(f"missing {key!r}")
    v = np.asarray(spec[key], dtype=float).reshape(-1)
    if dim is not None and v.shape[0] != dim:
        raise ProblemConfigError(f"{key!r} must have {dim} entries")
    return v


def _zero_prox(x, t):
    return np.asarray(x, dtype=float)


def _nonneg_prox(x, t):
    return np.maximum(x, 0.0)


def _l1_prox(weight, x, t):
    return soft_threshold(x, t * weight)


def _quad_prox(center, sigma, x, t):
    return prox_scaled_quadratic(center, sigma, t, x)


def _l1_quad_prox(center, sigma, weight, x, t):
    return prox_l1_quadratic(center, sigma, t, x, weight)


def _zero_conj_prox(u, gamma):
    return np.zeros_like(u)


def _point_conj_prox(b, u, gamma):
    return point_indicator_conj_prox(b, gamma, u)


def _prox_f(spec, dim):
    kind = spec.get("kind", "zero")
    if kind == "zero":
        return _zero_prox, 0.0
    if kind == "nonneg":
        return _nonneg_prox, 0.0
    if kind == "l1":
        return partial(_l1_prox, float(spec.get("weight", 1.0))), 0.0
    sigma = float(spec.get("sigma", 1.0))
    if sigma <= 0:
        raise ProblemConfigError("sigma must be positive")
    center = _vec(spec, "center", dim, np.zeros(dim))
    if kind == "quadratic":
        return partial(_quad_prox, center, sigma), sigma
    if kind == "l1_quadratic":
        return partial(_l1_quad_prox, center, sigma, float(spec.get("weight", 1.0))), sigma
    raise ProblemConfigError(f"unknown f kind {kind!r}")


def _g_fields(spec, dim):
    """Returns keyword arguments for CompositeProblem describing g."""
    kind = spec.get("kind", "zero")
    if kind == "zero":
        return {"prox_gconj": _zero_conj_prox}
    if kind == "point":
        return {"prox_gconj": partial(_point_conj_prox, _vec(spec, "b", dim))}
    if kind == "l1":
        return {"prox_g": partial(_l1_prox, float(spec.get("weight", 1.0)))}
    sigma = float(spec.get("sigma", 1.0))
    if sigma <= 0:
        raise ProblemConfigError("sigma must be positive")
    center = _vec(spec, "center", dim, np.zeros(dim))
    if kind == "quadratic":
        # g* of (s/2)|.-a|^2 is (1/s)-strongly convex
        return {"prox_g": partial(_quad_prox, center, sigma), "chi": 1.0 / sigma}
    if kind == "conj_l1_quadratic":
        return {"prox_gconj": partial(_l1_quad_prox, center, sigma,
                                      float(spec.get("weight", 1.0))),
                "chi": sigma}
    raise ProblemConfigError(f"unknown g kind {kind!r}")


def _projector(spec, dim, name):
    kind = spec.get("kind", "full")
    if kind == "full":
        return FixedPointMap.identity(dim)
    if kind == "affine" and name == "X":
        R = as_matrix(np.atleast_2d(spec["R"]), "R")
        if R.shape[1] != dim:
            raise ProblemConfigError("X.R has the wrong number of columns")
        return make_affine_projector(R, _vec(spec, "c", R.shape[0]))
    if kind == "basis" and name == "V":
        Q = as_matrix(np.asarray(spec["Q"], dtype=float).reshape(dim, -1), "Q")
        return make_subspace_projector(OrthonormalBasis(Q))
    raise ProblemConfigError(f"unknown {name} kind {kind!r}")


def _lsq_grad(K, Kt, y, x):
    return Kt.dot(K.dot(x) - y)


def _scaled_identity(s, u):
    return s * u


def build_problem(cfg):
    """Turn a parsed JSON config into ``(problem, schedule, init, stop)``."""
    try:
        L = as_matrix(np.atleast_2d(np.asarray(cfg["L"], dtype=float)), "L")
    except KeyError as exc:
        raise ProblemConfigError("missing 'L'") from exc
    out_dim, in_dim = L.shape
    lin = LinearMap.from_matrix(L)
    prox_f, rho = _prox_f(cfg.get("f", {}), in_dim)
    g = _g_fields(cfg.get("g", {}), out_dim)
    kw = dict(L=lin, prox_f=prox_f, rho=rho, **g)
    if "h" in cfg:
        h = cfg["h"]
        if h.get("kind") != "least_squares":
            raise ProblemConfigError(f"unknown h kind {h.get('kind')!r}")
        K = as_matrix(np.atleast_2d(h["K"]), "K")
        y = _vec(h, "y", K.shape[0])
        kw["grad_h"] = partial(_lsq_grad, K, np.ascontiguousarray(K.T), y)
        kw["beta"] = 1.0 / operator_norm(K) ** 2
    if "lstar" in cfg:
        ls = cfg["lstar"]
        if ls.get("kind") != "quadratic":
            raise ProblemConfigError(f"unknown lstar kind {ls.get('kind')!r}")
        s = float(ls.get("sigma", 1.0))
        kw["grad_lstar"] = partial(_scaled_identity, s)
        kw["delta"] = 1.0 / s
    kw["X_proj"] = _projector(cfg.get("X", {}), in_dim, "X")
    kw["V_proj"] = _projector(cfg.get("V", {}), out_dim, "V")
    try:
        problem = to_inclusion(CompositeProblem(**kw))
    except ValueError as exc:
        raise ProblemConfigError(str(exc)) from exc

    schedule = _schedule(cfg.get("schedule", {}), problem)
    init_spec = cfg.get("init", {})
    init = (_vec(init_spec, "x0", in_dim, np.zeros(in_dim)),
            _vec(init_spec, "u0", out_dim, np.zeros(out_dim)))
    stop = cfg.get("stop", {})
    stop = {"tol": float(stop.get("tol", 1e-8)), "max_iter": int(stop.get("max_iter", 100_000))}
    return problem, schedule, init, stop


def _schedule(spec, problem):
    kind = spec.get("kind", "static")
    L_norm = problem.L.norm_bound
    beta, delta = problem.beta, problem.delta
    if kind == "static":
        gamma = float(spec.get("gamma", 1.0))
        if "tau" in spec:
            tau = float(spec["tau"])
        else:
            dual = 1.0 / gamma - (0.0 if delta == math.inf else 1.0 / (2 * delta))
            if dual <= 0:
                raise ProblemConfigError("gamma must be below 2*delta")
            tau = 0.99 / (L_norm**2 / dual + (0.0 if beta == math.inf else 1 / (2 * beta)))
        return Static(tau, gamma, float(spec.get("theta", 1.0)))
    if kind == "accelerated":
        rho = float(spec.get("rho", problem.rho))
        return Accelerated.with_equality(float(spec.get("tau0", 1.0)), rho, L_norm, beta)
    if kind == "linear":
        return linear_rate_params(problem.rho, problem.chi, beta, delta, L_norm,
                                  float(spec.get("theta", 1.0)))
    raise ProblemConfigError(f"unknown schedule kind {kind!r}")
