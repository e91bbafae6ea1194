"""Benchmark harness: PCP against CP on random equality-constrained l1 problems.

Instances come from a counter-based generator (Philox) keyed by the config
seed, with one substream per ``(realization, purpose, attempt)`` so both
methods always see the same instance and any realization can be regenerated
on its own.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ppds.convex import EqualityConstrainedL1, cp_solve, pcp_solve
from ppds.linalg import operator_norm
from ppds.solver import StopReason, stepsize_region_membership

log = logging.getLogger(__name__)

_PURPOSE_MATRICES = 0
_PURPOSE_RHS = 1
_MAX_ATTEMPTS = 8


class InconsistentInstance(ValueError):
    pass


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    N: int = 1000
    m: int = 10
    n: int = 100
    gamma: float = 1e-2
    tolerances: tuple = (1e-4, 5e-5, 1e-5)
    realizations: int = 20
    seed: int = 0
    feasibility_mode: str = "feasible"  # or "raw"
    max_iter: int = 1_000_000
    distribution: str = "uniform"  # or "gaussian"
    project: str = "R"

    def __post_init__(self):
        tols = tuple(float(t) for t in self.tolerances)
        object.__setattr__(self, "tolerances", tols)
        if not tols or any(t <= 0 for t in tols):
            raise ConfigError("tolerances must be positive")
        if any(a <= b for a, b in zip(tols, tols[1:])):
            raise ConfigError("tolerances must be strictly decreasing")
        if self.realizations < 1:
            raise ConfigError("realizations must be >= 1")
        if min(self.N, self.m, self.n + 1) < 1:
            raise ConfigError("need N >= 1, m >= 1, n >= 0")
        if self.m + self.n >= self.N:
            raise ConfigError("need m + n < N")
        if self.feasibility_mode not in ("feasible", "raw"):
            raise ConfigError(f"unknown feasibility mode {self.feasibility_mode!r}")
        if self.distribution not in ("uniform", "gaussian"):
            raise ConfigError(f"unknown distribution {self.distribution!r}")
        if not self.gamma > 0:
            raise ConfigError("gamma must be positive")


PRESETS = {
    "table1": ExperimentConfig(m=1),
    "table2": ExperimentConfig(m=10),
    "table3": ExperimentConfig(m=30),
}


@dataclass(frozen=True)
class ResultRow:
    method: str
    tolerance: float
    mean_iterations: float
    mean_time_s: float
    runs: int
    max_iter_hits: int = 0

    @property
    def flagged(self):
        return self.max_iter_hits > 0


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list
    improvements: dict  # tolerance -> (iteration %, time %)
    runs: list = field(default_factory=list, repr=False)


def _stream(seed, index, purpose, attempt=0):
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(index, purpose, attempt))
    return np.random.Generator(np.random.Philox(ss))


def _draw(rng, shape, distribution):
    if distribution == "uniform":
        return rng.random(shape)
    return rng.standard_normal(shape)


def gen_instance(config, realization_index):
    """Deterministic random instance for ``(config.seed, realization_index)``."""
    N, m, n = config.N, config.m, config.n
    for attempt in range(_MAX_ATTEMPTS):
        rng = _stream(config.seed, realization_index, _PURPOSE_MATRICES, attempt)
        R = _draw(rng, (m, N), config.distribution)
        S = _draw(rng, (n, N), config.distribution)
        rhs = _stream(config.seed, realization_index, _PURPOSE_RHS, attempt)
        if config.feasibility_mode == "feasible":
            x_star = rhs.standard_normal(N)
            return EqualityConstrainedL1(R, S, R @ x_star, S @ x_star)
        c = _draw(rhs, m, config.distribution)
        d = _draw(rhs, n, config.distribution)
        inst = EqualityConstrainedL1(R, S, c, d)
        try:
            check_consistent(inst)
        except InconsistentInstance:
            log.warning("realization %d attempt %d inconsistent, redrawing",
                        realization_index, attempt)
            continue
        return inst
    raise InconsistentInstance(f"no consistent draw for realization {realization_index}")


def check_consistent(inst, tol=1e-8):
    L, b = inst.L, inst.b
    x, *_ = np.linalg.lstsq(L, b, rcond=None)
    resid = np.linalg.norm(L @ x - b)
    if resid > tol * max(1.0, np.linalg.norm(b)):
        raise InconsistentInstance(f"least-squares residual {resid:.3g}")
    return resid


def first_crossings(report, tolerances):
    """Iteration count and elapsed time when ``r_k`` first drops below each tol."""
    out = []
    res = report.residuals
    for tol in tolerances:
        hits = np.flatnonzero(res < tol)
        if hits.size == 0:
            out.append((report.iterations, report.wall_time, False))
        else:
            k = int(hits[0])
            out.append((k + 1, float(report.times[k]), True))
    return out


def run_realization(config, index):
    """Run PCP and CP on one realization down to the tightest tolerance.

    Since ``r_k`` of a deterministic trajectory does not depend on the
    stopping rule, a single run to the tightest tolerance yields the first
    crossing of every looser one.
    """
    inst = gen_instance(config, index)
    L_norm = operator_norm(inst.L)
    tol = config.tolerances[-1]
    pcp = pcp_solve(inst, config.gamma, tol=tol, max_iter=config.max_iter,
                    project=config.project, L_norm=L_norm)
    cp = cp_solve(inst, config.gamma, tol=tol, max_iter=config.max_iter, L_norm=L_norm)
    for name, rep in (("PCP", pcp), ("CP", cp)):
        if rep.stop_reason is StopReason.MAX_ITERATIONS:
            log.warning("%s hit max_iter on realization %d", name, index)
    return {
        "index": index,
        "PCP": first_crossings(pcp, config.tolerances),
        "CP": first_crossings(cp, config.tolerances),
    }


def _run_one(args):
    return run_realization(*args)


def improvement(cp_value, pcp_value):
    """Percentage improvement ``100 (cp - pcp)/cp``."""
    return 100.0 * (cp_value - pcp_value) / cp_value


def aggregate(config, runs):
    runs = sorted(runs, key=lambda r: r["index"])
    rows = []
    for method in ("PCP", "CP"):
        for j, tol in enumerate(config.tolerances):
            its = [r[method][j][0] for r in runs]
            ts = [r[method][j][1] for r in runs]
            misses = sum(not r[method][j][2] for r in runs)
            rows.append(ResultRow(method, tol, float(np.mean(its)), float(np.mean(ts)),
                                  len(runs), misses))
    by_key = {(r.method, r.tolerance): r for r in rows}
    improvements = {}
    for tol in config.tolerances:
        p, c = by_key["PCP", tol], by_key["CP", tol]
        t_imp = improvement(c.mean_time_s, p.mean_time_s) if c.mean_time_s > 0 else math.nan
        improvements[tol] = (improvement(c.mean_iterations, p.mean_iterations), t_imp)
    return rows, improvements


def run_experiment(config, workers=None):
    """Run every realization and aggregate mean iterations and times.

    With ``workers > 1`` realizations run in separate processes; the
    reduction is ordered by realization index, so tables are identical to a
    serial run apart from timings.
    """
    jobs = [(config, i) for i in range(config.realizations)]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_run_one, jobs))
    else:
        runs = [_run_one(j) for j in jobs]
    rows, improvements = aggregate(config, runs)
    return ExperimentResult(config, rows, improvements, runs)


# --- output ---------------------------------------------------------------

CSV_FIELDS = ["method", "tolerance", "mean_iterations", "mean_time_s", "runs",
              "max_iter_hits"]


def to_csv(result, include_timing=True):
    buf = io.StringIO()
    fields = CSV_FIELDS if include_timing else [f for f in CSV_FIELDS if f != "mean_time_s"]
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in result.rows:
        rec = {"method": r.method, "tolerance": repr(r.tolerance),
               "mean_iterations": repr(r.mean_iterations), "mean_time_s": repr(r.mean_time_s),
               "runs": r.runs, "max_iter_hits": r.max_iter_hits}
        w.writerow({k: rec[k] for k in fields})
    for tol, (it_pct, t_pct) in result.improvements.items():
        rec = {"method": "improvement_pct", "tolerance": repr(tol),
               "mean_iterations": repr(it_pct), "mean_time_s": repr(t_pct),
               "runs": result.config.realizations, "max_iter_hits": ""}
        w.writerow({k: rec[k] for k in fields})
    return buf.getvalue()


def to_markdown(result):
    cfg = result.config
    tols = cfg.tolerances
    head = f"| m={cfg.m}, n={cfg.n}, N={cfg.N} | " + " | ".join(
        f"e={t:g} iter | e={t:g} time (s)" for t in tols) + " |"
    sep = "|" + "---|" * (1 + 2 * len(tols))
    by_key = {(r.method, r.tolerance): r for r in result.rows}
    lines = [head, sep]
    for method in ("PCP", "CP"):
        cells = []
        for t in tols:
            r = by_key[method, t]
            flag = "*" if r.flagged else ""
            cells += [f"{r.mean_iterations:.0f}{flag}", f"{r.mean_time_s:.2f}"]
        lines.append(f"| {method} | " + " | ".join(cells) + " |")
    cells = []
    for t in tols:
        it_pct, t_pct = result.improvements[t]
        cells += [f"{it_pct:.1f}", f"{t_pct:.1f}"]
    lines.append("| %improv. | " + " | ".join(cells) + " |")
    if any(r.flagged for r in result.rows):
        lines.append("")
        lines.append("\\* some runs hit max_iter before reaching the tolerance")
    return "\n".join(lines) + "\n"


# --- step-size regions ----------------------------------------------------


@dataclass(frozen=True)
class RegionRecord:
    tau: float
    gamma: float
    in_Rb: bool
    in_Sb: bool


def emit_region_grid(b, resolution):
    """Sample ``[0, 2b]^2`` on a ``resolution x resolution`` grid."""
    if resolution < 2:
        raise ConfigError("resolution must be >= 2")
    if not b > 0:
        raise ConfigError("b must be positive")
    axis = np.linspace(0.0, 2.0 * b, resolution)
    out = []
    for tau in axis:
        for gamma in axis:
            m = stepsize_region_membership(float(tau), float(gamma), b)
            out.append(RegionRecord(float(tau), float(gamma), m.in_Rb, m.in_Sb))
    return out


def regions_to_csv(records):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["tau", "gamma", "in_Rb", "in_Sb"])
    for r in records:
        w.writerow([repr(r.tau), repr(r.gamma), int(r.in_Rb), int(r.in_Sb)])
    return buf.getvalue()


def with_overrides(config, **kw):
    kw = {k: v for k, v in kw.items() if v is not None}
    try:
        return replace(config, **kw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
