"""
Accelerator Module

Sample-and-threshold acceleration of a packing LP solver.

Core step (one eps_f):
    1. sample s = ceil(eps_s * n) columns uniformly without replacement
    2. solve the sample LP, whose right-hand side is (1 - eps_f) * eps_s / alpha_d * b
    3. set x_j = 1 iff a_j.phi < c_j for every original column j, else 0

Full framework: walk an increasing eps_f schedule starting at 0 and return
the first thresholded vector that is feasible for the original LP. If the
schedule runs out, the all-zeros vector (always feasible for a packing LP)
is returned with the fallback flag set. A caller-supplied stop predicate is
polled before every schedule point; when it fires the search raises
RunCancelled instead of solving further sample LPs.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from packing_accel.config import AcceleratorConfig
from packing_accel.core.helpers import Stopwatch, make_rng, now
from packing_accel.core.lp import PackingLp, _as_vector, check_feasible, objective
from packing_accel.core.report import RunReport
from packing_accel.core.solvers import Solver, SolverOutcome, get_solver
from packing_accel.errors import AcceleratorError, DimensionError, RunCancelled, SolverError, SpecError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SampleLp:
    lp: PackingLp
    index_map: np.ndarray
    eps_s: float
    eps_f: float
    alpha_d: float

    @property
    def s(self) -> int:
        return int(self.index_map.size)


class CoreRun(NamedTuple):
    x_hat: np.ndarray
    sample: SampleLp
    outcome: SolverOutcome
    solve_time: float
    threshold_time: float


@dataclass
class Acceleration:
    """Everything the feasibility search produced, including the eps_f trace."""

    x_hat: np.ndarray
    eps_f_used: float
    report: RunReport
    fallback: bool = False
    iterations: int = 0
    # (eps_f, "feasible" | "infeasible" | error message)
    trace: list = field(default_factory=list)
    last_sample: Optional[SampleLp] = None


# ============================================================================
# SAMPLING AND SAMPLE LP
# ============================================================================

def sample_size(n: int, eps_s: float) -> int:
    # round() absorbs products such as 0.07 * 100 = 7.000000000000001
    return min(n, max(1, math.ceil(round(eps_s * n, 9))))


def sample_variables(n: int, eps_s: float, rng: np.random.Generator) -> np.ndarray:
    """ceil(eps_s * n) distinct column indices, uniform without replacement, sorted."""
    if n < 1:
        raise SpecError(f"n must be >= 1, got {n}")
    if not 0 < eps_s <= 1:
        raise SpecError(f"eps_s must lie in (0, 1], got {eps_s}")
    s = sample_size(n, eps_s)
    if s == n:
        return np.arange(n)
    return np.sort(rng.choice(n, size=s, replace=False))


def build_sample_lp(lp: PackingLp, S, eps_s: float, eps_f: float, alpha_d: float) -> SampleLp:
    S = np.asarray(S, dtype=np.int64).reshape(-1)
    if S.size and (S.min() < 0 or S.max() >= lp.n):
        raise DimensionError(f"sample index out of range for n={lp.n}")
    if S.size != sample_size(lp.n, eps_s):
        raise DimensionError(f"sample has {S.size} columns, expected ceil(eps_s*n)={sample_size(lp.n, eps_s)}")
    if not 0 <= eps_f < 1:
        raise SpecError(f"eps_f must lie in [0, 1), got {eps_f}")
    if alpha_d < 1:
        raise SpecError(f"alpha_d must be >= 1, got {alpha_d}")
    rhs = (1.0 - eps_f) * eps_s / alpha_d * lp.b
    S.setflags(write=False)
    return SampleLp(lp=lp.restrict(S, rhs), index_map=S, eps_s=eps_s, eps_f=eps_f, alpha_d=alpha_d)


# ============================================================================
# THRESHOLDING
# ============================================================================

def threshold(lp: PackingLp, phi, workers: int = 1) -> np.ndarray:
    """
    x_j = 1 if sum_i a_ij phi_i < c_j else 0, for all n columns.
    Strict comparison on the computed doubles: a tie maps to 0.
    """
    phi = _as_vector(phi, lp.m, "phi")
    if workers <= 1 or lp.n < 2 * workers:
        return (lp.A.T @ phi < lp.c).astype(np.float64)

    bounds = np.linspace(0, lp.n, workers + 1).astype(np.int64)
    x_hat = np.empty(lp.n, dtype=np.float64)

    def _block(lo, hi):
        x_hat[lo:hi] = lp.A[:, lo:hi].T @ phi < lp.c[lo:hi]

    with ThreadPoolExecutor(max_workers=workers) as pool:
        for future in [pool.submit(_block, lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:])]:
            future.result()
    return x_hat


# ============================================================================
# CORE ALGORITHM AND FEASIBILITY SEARCH
# ============================================================================

def accelerate_once(lp: PackingLp, solver: Solver, eps_s: float, eps_f: float, rng: np.random.Generator,
                    alpha_d: Optional[float] = None, sample=None, threshold_workers: int = 1) -> CoreRun:
    """
    One pass of the core algorithm. The returned vector is binary but not
    necessarily feasible. `sample` reuses a column set instead of drawing one.
    """
    alpha = solver.alpha_d if alpha_d is None else alpha_d
    S = sample_variables(lp.n, eps_s, rng) if sample is None else sample
    sample_lp = build_sample_lp(lp, S, eps_s, eps_f, alpha)

    solve_clock, threshold_clock = Stopwatch(), Stopwatch()
    with solve_clock.measure():
        outcome = solver.solve(sample_lp.lp)
    with threshold_clock.measure():
        x_hat = threshold(lp, outcome.dual.phi, workers=threshold_workers)
    return CoreRun(x_hat, sample_lp, outcome, solve_clock.elapsed, threshold_clock.elapsed)


def run_schedule(lp: PackingLp, solver: Optional[Solver], config: AcceleratorConfig,
                 should_stop: Optional[Callable[[], bool]] = None) -> Acceleration:
    """
    The full feasibility search over config.ef_schedule. `should_stop` is
    checked before each schedule point and raises RunCancelled once true.
    """
    if solver is None:
        solver = get_solver(config.solver)
    alpha = solver.alpha_d if config.alpha_d is None else config.alpha_d
    rng = make_rng(config.seed)
    solve_time = threshold_time = 0.0
    started = now()

    fixed_sample = None if config.resample_per_ef else sample_variables(lp.n, config.eps_s, rng)
    trace = []
    failures = []
    iterations = 0
    x_hat, eps_f_used, last_sample = None, None, None
    for eps_f in config.schedule:
        if should_stop is not None and should_stop():
            logger.debug("Accelerator: stopped before eps_f=%g", eps_f)
            raise RunCancelled(f"feasibility search stopped before eps_f={eps_f:g}")
        try:
            core = accelerate_once(lp, solver, config.eps_s, eps_f, rng, alpha_d=alpha,
                                   sample=fixed_sample, threshold_workers=config.threshold_workers)
        except SolverError as e:
            logger.warning("Accelerator: solver failed at eps_f=%g: %s", eps_f, e)
            failures.append((eps_f, str(e)))
            trace.append((eps_f, str(e)))
            continue
        solve_time += core.solve_time
        threshold_time += core.threshold_time
        iterations += core.outcome.iterations
        last_sample = core.sample
        feasible = check_feasible(lp, core.x_hat, tol=config.tol).feasible
        trace.append((eps_f, "feasible" if feasible else "infeasible"))
        logger.debug("Accelerator: eps_f=%g s=%d feasible=%s", eps_f, core.sample.s, feasible)
        if feasible:
            x_hat, eps_f_used = core.x_hat, eps_f
            break

    fallback = x_hat is None
    if fallback:
        if len(failures) == len(config.schedule):
            raise AcceleratorError(failures)
        logger.warning("Accelerator: eps_f schedule exhausted, returning the all-zeros solution")
        x_hat, eps_f_used = np.zeros(lp.n), 1.0
    total_time = now() - started

    x_hat.setflags(write=False)
    report = RunReport(
        instance=lp.fingerprint(),
        m=lp.m,
        n=lp.n,
        method="accelerate",
        eps_s=config.eps_s,
        eps_f_used=eps_f_used,
        alpha_d=alpha,
        objective=objective(lp, x_hat),
        solve_time=solve_time,
        threshold_time=threshold_time,
        total_time=total_time,
        feasible=check_feasible(lp, x_hat, tol=config.tol).feasible,
        fallback=fallback,
    )
    logger.info("Accelerator: eps_s=%g eps_f_used=%g objective=%.10g in %.4fs%s",
                config.eps_s, eps_f_used, report.objective, total_time, " (fallback)" if fallback else "")
    return Acceleration(x_hat=x_hat, eps_f_used=eps_f_used, report=report, fallback=fallback,
                        iterations=iterations, trace=trace, last_sample=last_sample)


def accelerate(lp: PackingLp, solver: Optional[Solver], config: AcceleratorConfig) -> tuple:
    """Returns (x_hat, eps_f_used, RunReport)."""
    result = run_schedule(lp, solver, config)
    return result.x_hat, result.eps_f_used, result.report


# ============================================================================
# WORST-CASE BOUND
# ============================================================================

def theoretical_ef_flagged(m: int, n: int, eps_s: float, B: float) -> tuple:
    """
    Smallest eps_f the worst-case guarantee allows, 3*sqrt(6(m+2) ln n / (eps_s B)),
    and whether it is out of regime (> 1, where the guarantee says nothing).
    """
    if m < 1 or n < 2 or eps_s <= 0 or B <= 0:
        raise SpecError("theoretical_ef needs m >= 1, n >= 2, eps_s > 0 and B > 0")
    value = 3.0 * math.sqrt(6.0 * (m + 2) * math.log(n) / (eps_s * B))
    return value, value > 1.0


def theoretical_ef(m: int, n: int, eps_s: float, B: float) -> float:
    return theoretical_ef_flagged(m, n, eps_s, B)[0]
