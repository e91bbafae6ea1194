"""Projected primal-dual splitting.

Solves the primal-dual pair

    find x in Fix T with 0 in A x + L^* (B [] D)(L x) + C x,
    find u in V   with -L^* u in A x + C x,  u in (B [] D)(L x),

by iterating (dual update first)

    eta+ = J_{g B^-1}(u + g (L xbar - D^-1 u))
    u+   = P_V eta+
    p+   = J_{t A}(x - t (L^* u+ + C x))
    x+   = T p+
    xbar+ = x+ + theta (p+ - x)

under three step-size regimes: static, accelerated (A strongly monotone) and
linearly convergent (A and B^-1 both strongly monotone).
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

import numpy as np

from ppds.operators import CocoerciveOp, FixedPointMap, LinearMap, MonotoneOp

#: relative tolerance used to decide equality in the step-size condition
EQUALITY_RTOL = 1e-12


class NonFiniteIterate(FloatingPointError):
    pass


class StepsizeRegimeMismatch(ValueError):
    pass


class ThetaOutOfRange(ValueError):
    pass


class StopReason(str, enum.Enum):
    TOLERANCE_REACHED = "ToleranceReached"
    MAX_ITERATIONS = "MaxIterations"


class StepsizeStatus(str, enum.Enum):
    STRICT = "StrictlySatisfied"
    EQUALITY = "SatisfiedWithEquality"
    VIOLATED = "Violated"


@dataclass(frozen=True)
class InclusionProblem:
    A: MonotoneOp
    Binv: MonotoneOp
    C: CocoerciveOp
    Dinv: CocoerciveOp
    L: LinearMap
    T: FixedPointMap
    PV: FixedPointMap
    check_range_samples: int = 3

    def __post_init__(self):
        if self.check_range_samples and not self.PV.is_identity:
            self.check_range(self.check_range_samples)

    @property
    def primal_dim(self):
        return self.L.in_dim

    @property
    def dual_dim(self):
        return self.L.out_dim

    @property
    def rho(self):
        return self.A.strong_modulus

    @property
    def chi(self):
        return self.Binv.strong_modulus

    @property
    def beta(self):
        return self.C.modulus

    @property
    def delta(self):
        return self.Dinv.modulus

    def check_range(self, n_samples=3, seed=0):
        """Check ``ran L`` lies in ``V`` on random primal samples."""
        rng = np.random.default_rng(seed)
        for _ in range(n_samples):
            y = self.L.forward(rng.standard_normal(self.primal_dim))
            err = np.linalg.norm(self.PV(y) - y)
            if err > 1e-10 * (1.0 + np.linalg.norm(y)):
                raise ValueError(f"range of L is not contained in V (residual {err:.3g})")


@dataclass(frozen=True)
class Static:
    tau: float
    gamma: float
    theta: float = 1.0

    def __post_init__(self):
        if not (self.tau > 0 and self.gamma > 0):
            raise ValueError("step sizes must be positive")
        if not 0 < self.theta <= 1:
            raise ThetaOutOfRange("theta must lie in (0, 1]")


@dataclass(frozen=True)
class Accelerated:
    tau0: float
    gamma0: float
    rho: float

    def __post_init__(self):
        if not (self.tau0 > 0 and self.gamma0 > 0):
            raise ValueError("step sizes must be positive")
        if self.rho < 0:
            raise ValueError("rho must be nonnegative")

    @classmethod
    def with_equality(cls, tau0, rho, L_norm, beta=math.inf):
        """Pick ``gamma0`` so the step-size condition holds with equality (D^-1 = 0)."""
        gamma0 = 1.0 / (L_norm**2 * (1.0 / tau0 - 1.0 / (2.0 * beta)))
        return cls(tau0, gamma0, rho)


@dataclass(frozen=True)
class LinearRate:
    tau: float
    gamma: float
    theta: float
    mu: float
    alpha: float
    omega: float

    def __post_init__(self):
        if not math.isclose(self.omega, (1 + self.theta) / (2 + self.alpha), rel_tol=1e-14):
            raise ValueError("omega must equal (1 + theta)/(2 + alpha)")
        if not self.omega < self.theta <= 1:
            raise ThetaOutOfRange("need omega < theta <= 1")


StepSchedule = Union[Static, Accelerated, LinearRate]


@dataclass(frozen=True)
class IterationState:
    k: int
    x: np.ndarray
    x_bar: np.ndarray
    u: np.ndarray
    tau: float
    gamma: float
    theta: float
    last_p: np.ndarray
    last_eta: np.ndarray
    prev_x: np.ndarray

    @classmethod
    def initial(cls, x0, u0, tau, gamma, theta):
        x0 = np.array(x0, dtype=float)
        u0 = np.array(u0, dtype=float)
        # xbar0 = x0 and p0 = x0 =: x^{-1}
        return cls(0, x0, x0, u0, tau, gamma, theta, x0, u0, x0)


@dataclass
class SolveReport:
    iterations: int
    final_x: np.ndarray
    final_u: np.ndarray
    residuals: np.ndarray
    stop_reason: StopReason
    wall_time: float
    times: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))
    final_state: Optional[IterationState] = field(repr=False, default=None)
    trajectory: Optional[list] = field(repr=False, default=None)


def _half_inv(m):
    # 1/(2m) with 1/(2*inf) = 0
    return 0.0 if m == math.inf else 1.0 / (2.0 * m)


def validate_stepsizes(tau, gamma, beta, delta, L_norm):
    """Classify ``||L||^2`` against ``(1/tau - 1/(2beta)) (1/gamma - 1/(2delta))``."""
    if not (0 < tau < 2 * beta and 0 < gamma < 2 * delta):
        return StepsizeStatus.VIOLATED
    rhs = (1.0 / tau - _half_inv(beta)) * (1.0 / gamma - _half_inv(delta))
    lhs = float(L_norm) ** 2
    if abs(lhs - rhs) <= EQUALITY_RTOL * max(abs(lhs), abs(rhs)):
        return StepsizeStatus.EQUALITY
    return StepsizeStatus.STRICT if lhs < rhs else StepsizeStatus.VIOLATED


@dataclass(frozen=True)
class RegionMembership:
    in_Rb: bool
    in_Sb: bool


def stepsize_region_membership(tau, gamma, b):
    """Membership of ``(tau, gamma)`` in the regions R_b and S_b (with ||L|| = 1).

    R_b is the region where the older, stronger condition
    ``min{(1 - sqrt(tau gamma))/tau, (1 - sqrt(tau gamma))/gamma} > 1/(2b)``
    holds; S_b is ``(1 - tau/(2b))(1 - gamma/(2b)) > tau gamma``, the strict
    form of the step-size condition with beta = delta = b.
    """
    if not (0 <= tau <= 2 * b and 0 <= gamma <= 2 * b):
        return RegionMembership(False, False)
    slack = 1.0 - math.sqrt(tau * gamma)
    terms = [math.inf if s == 0 else slack / s for s in (tau, gamma)]
    in_r = min(terms) > 1.0 / (2.0 * b)
    in_s = (1.0 - tau / (2.0 * b)) * (1.0 - gamma / (2.0 * b)) > tau * gamma
    return RegionMembership(bool(in_r), bool(in_s))


def accelerated_theta(rho, tau):
    return 1.0 / math.sqrt(1.0 + 2.0 * rho * tau)


def initial_theta(schedule):
    if isinstance(schedule, Accelerated):
        return accelerated_theta(schedule.rho, schedule.tau0)
    return schedule.theta


def initial_steps(schedule):
    if isinstance(schedule, Accelerated):
        return schedule.tau0, schedule.gamma0
    return schedule.tau, schedule.gamma


def schedule_advance(schedule, state):
    """Step sizes ``(tau, gamma, theta)`` for iteration ``state.k``'s successor.

    For the accelerated schedule ``theta_k = 1/sqrt(1 + 2 rho tau_k)`` is
    recomputed from ``state.tau``; then ``tau_{k+1} = theta_k tau_k`` and
    ``gamma_{k+1} = gamma_k / theta_k``, and the returned theta is
    ``theta_{k+1}``.
    """
    if isinstance(schedule, Accelerated):
        theta_k = accelerated_theta(schedule.rho, state.tau)
        tau_next = theta_k * state.tau
        gamma_next = state.gamma / theta_k
        return tau_next, gamma_next, accelerated_theta(schedule.rho, tau_next)
    if isinstance(schedule, (Static, LinearRate)):
        return schedule.tau, schedule.gamma, schedule.theta
    raise TypeError(f"unknown schedule {schedule!r}")


def linear_rate_params(rho, chi, beta, delta, L_norm, theta=1.0):
    """Constant parameters of the linearly convergent regime.

    ``mu = 2 sqrt(rho chi)/||L||``, ``alpha`` and ``(tau, gamma)`` are chosen so
    the step-size condition holds with equality; ``omega = (1+theta)/(2+alpha)``
    is the contraction factor of the Lyapunov quantity.
    """
    if not (rho > 0 and chi > 0):
        raise StepsizeRegimeMismatch("the linear regime needs rho > 0 and chi > 0")
    mu = 2.0 * math.sqrt(rho * chi) / L_norm
    ib, id_ = 1.0 / beta, 1.0 / delta
    alpha = min(mu * rho / (rho + mu * ib / 4.0), mu * chi / (chi + mu * id_ / 4.0))
    if not (1.0 / (1.0 + alpha) < theta <= 1.0):
        raise ThetaOutOfRange(f"theta must lie in ({1.0 / (1.0 + alpha)}, 1]")
    # 2 beta mu/(mu + 4 beta rho), written to survive beta = inf
    tau = 2.0 * mu / (mu * ib + 4.0 * rho)
    gamma = 2.0 * mu / (mu * id_ + 4.0 * chi)
    omega = (1.0 + theta) / (2.0 + alpha)
    status = validate_stepsizes(tau, gamma, beta, delta, L_norm)
    if status is not StepsizeStatus.EQUALITY:
        raise StepsizeRegimeMismatch(f"linear-rate steps classified as {status.value}")
    return LinearRate(tau, gamma, theta, mu, alpha, omega)


def step(problem, state):
    """One pass of the projected primal-dual iteration."""
    tau, gamma, theta = state.tau, state.gamma, state.theta
    x, u = state.x, state.u
    L = problem.L

    v = u + gamma * L.forward(state.x_bar)
    if not problem.Dinv.is_zero:
        v = v - gamma * problem.Dinv(u)
    eta = problem.Binv.resolvent(v, gamma)
    u_new = problem.PV(eta)

    w = L.adjoint(u_new)
    if not problem.C.is_zero:
        w = w + problem.C(x)
    p = problem.A.resolvent(x - tau * w, tau)
    x_new = problem.T(p)
    x_bar = x_new + theta * (p - x)

    if not math.isfinite(x_bar.dot(x_bar) + u_new.dot(u_new) + x_new.dot(x_new)):
        raise NonFiniteIterate(f"non-finite iterate at k={state.k + 1}")
    return IterationState(state.k + 1, x_new, x_bar, u_new, tau, gamma, theta, p, eta, x)


def relative_error(prev, curr):
    """``sqrt((|du|^2 + |dx|^2)/(|u|^2 + |x|^2))``; +inf when the denominator is 0."""
    x0, u0 = (np.asarray(a, dtype=float) for a in prev)
    x1, u1 = (np.asarray(a, dtype=float) for a in curr)
    if x0.shape != x1.shape or u0.shape != u1.shape:
        raise ValueError("dimension mismatch")
    den = x0.dot(x0) + u0.dot(u0)
    if den == 0.0:
        return math.inf
    dx, du = x1 - x0, u1 - u0
    return math.sqrt((du.dot(du) + dx.dot(dx)) / den)


def check_regime(problem, schedule):
    """Raise :class:`StepsizeRegimeMismatch` unless ``schedule`` fits ``problem``."""
    L_norm = problem.L.norm_bound
    if isinstance(schedule, Static):
        status = validate_stepsizes(schedule.tau, schedule.gamma, problem.beta,
                                    problem.delta, L_norm)
        if status is not StepsizeStatus.STRICT:
            raise StepsizeRegimeMismatch(
                f"static schedule needs the strict step-size condition, got {status.value}")
    elif isinstance(schedule, Accelerated):
        if not problem.Dinv.is_zero or problem.chi > 0:
            raise StepsizeRegimeMismatch("accelerated schedule needs D^-1 = 0 and chi = 0")
        if schedule.rho > problem.rho:
            raise StepsizeRegimeMismatch(
                f"schedule rho={schedule.rho} exceeds the modulus of A ({problem.rho})")
        status = validate_stepsizes(schedule.tau0, schedule.gamma0, problem.beta,
                                    math.inf, L_norm)
        if status is not StepsizeStatus.EQUALITY:
            raise StepsizeRegimeMismatch(
                f"accelerated schedule needs equality in the step-size condition, "
                f"got {status.value}")
    elif isinstance(schedule, LinearRate):
        if not (problem.rho > 0 and problem.chi > 0):
            raise StepsizeRegimeMismatch("linear-rate schedule needs rho > 0 and chi > 0")
        status = validate_stepsizes(schedule.tau, schedule.gamma, problem.beta,
                                    problem.delta, L_norm)
        if status is not StepsizeStatus.EQUALITY:
            raise StepsizeRegimeMismatch(
                f"linear-rate schedule needs equality, got {status.value}")
    else:
        raise TypeError(f"unknown schedule {schedule!r}")


def solve(problem, schedule, init=None, tol=1e-6, max_iter=1_000_000,
          callback: Optional[Callable[[IterationState], None]] = None,
          record_trajectory=False, validate=True):
    """Run the iteration until the relative change drops below ``tol``.

    Parameters
    ----------
    problem : InclusionProblem
    schedule : Static | Accelerated | LinearRate
    init : tuple of arrays, optional
        ``(x0, u0)``; zeros when omitted.
    tol : float
        Stop at the first ``k`` with ``r_k < tol``. Steps where ``r_k`` is
        undefined (zero previous iterate) record ``inf`` and never stop.
    max_iter : int
    callback : callable, optional
        Called with every new :class:`IterationState`.
    record_trajectory : bool
        Keep every ``(x, u)`` pair in ``SolveReport.trajectory``.
    validate : bool
        Check the schedule against the problem's moduli before iterating.
    """
    if validate:
        check_regime(problem, schedule)
    if init is None:
        init = (np.zeros(problem.primal_dim), np.zeros(problem.dual_dim))
    x0, u0 = init
    if len(x0) != problem.primal_dim or len(u0) != problem.dual_dim:
        raise ValueError("initial point does not match problem dimensions")
    tau, gamma = initial_steps(schedule)
    state = IterationState.initial(x0, u0, tau, gamma, initial_theta(schedule))

    residuals = []
    times = []
    trajectory = [(state.x, state.u)] if record_trajectory else None
    stop = StopReason.MAX_ITERATIONS
    prev_sq = state.x.dot(state.x) + state.u.dot(state.u)
    static = not isinstance(schedule, Accelerated)
    start = time.perf_counter()
    for _ in range(max_iter):
        new = step(problem, state)
        dx = new.x - state.x
        du = new.u - state.u
        new_sq = new.x.dot(new.x) + new.u.dot(new.u)
        r = math.sqrt((dx.dot(dx) + du.dot(du)) / prev_sq) if prev_sq > 0 else math.inf
        residuals.append(r)
        times.append(time.perf_counter() - start)
        if record_trajectory:
            trajectory.append((new.x, new.u))
        if callback is not None:
            callback(new)
        if not static:
            t_next, g_next, th_next = schedule_advance(schedule, new)
            new = replace(new, tau=t_next, gamma=g_next, theta=th_next)
        state = new
        prev_sq = new_sq
        if r < tol:
            stop = StopReason.TOLERANCE_REACHED
            break
    wall = time.perf_counter() - start
    return SolveReport(
        iterations=state.k,
        final_x=state.x,
        final_u=state.u,
        residuals=np.asarray(residuals),
        stop_reason=stop,
        wall_time=wall,
        times=np.asarray(times),
        final_state=state,
        trajectory=trajectory,
    )


# --- diagnostics used to check the convergence guarantees ------------------


def omega_lyapunov(x, u, x_hat, u_hat, rho, chi, mu, beta, delta):
    """``(chi + mu/(4 delta))|u - u_hat|^2 + (rho + mu/(4 beta))|x - x_hat|^2``."""
    du = np.asarray(u) - u_hat
    dx = np.asarray(x) - x_hat
    return ((chi + mu / (4.0 * delta)) * du.dot(du)
            + (rho + mu / (4.0 * beta)) * dx.dot(dx))


def linear_rate_lhs(x, u, x_hat, u_hat, rho, chi, mu, beta, delta, omega):
    """Left side of the linear-rate bound; ``chi`` is discounted by ``1 - omega``."""
    du = np.asarray(u) - u_hat
    dx = np.asarray(x) - x_hat
    return ((chi * (1.0 - omega) + mu / (4.0 * delta)) * du.dot(du)
            + (rho + mu / (4.0 * beta)) * dx.dot(dx))


def accelerated_bound(k, x0, u0, x_hat, u_hat, rho, tau0, beta, L_norm, eps=0.1):
    """O(1/k^2) bound on ``|x^k - x_hat|^2`` for the accelerated schedule."""
    dx = np.asarray(x0) - x_hat
    du = np.asarray(u0) - u_hat
    # 2 beta/(2 beta - tau0) -> 1 as beta -> inf
    ratio = 1.0 / (1.0 - tau0 * _half_inv(beta))
    const = dx.dot(dx) / (rho * tau0) ** 2 + ratio * L_norm**2 * du.dot(du) / rho**2
    return (1.0 + eps) * const / k**2


def fejer_energy(problem, state, tau, gamma, x_hat, u_hat):
    """Nonincreasing quantity of the static regime evaluated at ``state``.

    Uses ``p^k = state.last_p``, ``eta^k = state.last_eta`` and
    ``x^{k-1} = state.prev_x``.
    """
    p, eta, x_prev = state.last_p, state.last_eta, state.prev_x
    de = eta - u_hat
    dp = p - x_prev
    dh = p - x_hat
    upsilon = (de.dot(de) / gamma
               + 2.0 * problem.L.forward(dp).dot(de)
               + (1.0 / tau - _half_inv(problem.beta)) * dp.dot(dp))
    return upsilon + dh.dot(dh) / tau
