"""
Solver Module

The black-box LP solver abstraction used by the accelerator, plus the
built-in implementations:

    - "simplex":     revised simplex with implicit [0,1] bounds, exact (1, 1)
    - "dual-ascent": greedy water-filling on the dual prices, (1, measured)
    - "highs":       adapter over scipy's HiGHS, exact (1, 1)

Every solver returns primal values, dual prices phi for the packing rows and
box duals psi for the x_j <= 1 bounds. The accelerator only consumes phi.

Threading Model:
    Solvers hold configuration only; `solve` keeps all state on the stack, so
    one solver object may be used from several threads at once.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.optimize import linprog

from packing_accel.core.helpers import now
from packing_accel.core.lp import DualSolution, PackingLp, PrimalSolution
from packing_accel.errors import SolverError, SpecError

logger = logging.getLogger(__name__)

SIMPLEX_SOFT_MAX_ROWS = 2000


@dataclass(frozen=True)
class SolverOutcome:
    primal: PrimalSolution
    dual: DualSolution
    iterations: int
    wall_time: float
    solver: str = ""
    alpha_p: float = 1.0
    alpha_d: float = 1.0


class Solver(ABC):
    """An (alpha_p, alpha_d)-approximation algorithm for packing LPs."""

    name = "abstract"
    alpha_p = 1.0
    alpha_d = 1.0
    exact = False

    def __init__(self, tol: float = 1e-9, max_iterations: Optional[int] = None, verbose: bool = False):
        self.tol = tol
        self.max_iterations = max_iterations
        self.verbose = verbose

    @abstractmethod
    def _solve(self, lp: PackingLp) -> tuple:
        """Returns (x, phi, psi, iterations)."""

    def solve(self, lp: PackingLp) -> SolverOutcome:
        start = now()
        x, phi, psi, iterations = self._solve(lp)
        wall_time = now() - start
        x = np.clip(x, 0.0, 1.0)
        for array in (x, phi, psi):
            array.setflags(write=False)
        outcome = SolverOutcome(
            primal=PrimalSolution(x=x, objective=float(lp.c @ x)),
            dual=DualSolution(phi=phi, psi=psi),
            iterations=iterations,
            wall_time=wall_time,
            solver=self.name,
            alpha_p=self.alpha_p,
            alpha_d=self.alpha_d,
        )
        logger.debug(
            "%s: solved m=%d n=%d in %d iterations, objective %.10g, %.4fs",
            self.name, lp.m, lp.n, iterations, outcome.primal.objective, wall_time,
        )
        return outcome

    def _trace(self, message, *args):
        if self.verbose:
            logger.info(message, *args)
        else:
            logger.debug(message, *args)


# ============================================================================
# REVISED SIMPLEX WITH BOUNDED VARIABLES
# ============================================================================

class SimplexSolver(Solver):
    """
    Revised primal simplex on  max c.x  s.t.  Ax + s = b,  0 <= x <= 1,  s >= 0.

    The box is handled implicitly: nonbasic structurals sit at 0 or at 1, so
    the basis stays m x m no matter how wide the instance is. The slack basis
    is feasible because b >= 0; an optional greedy crash moves cheap-to-fit
    columns to their upper bound before the first pivot. Pricing is Dantzig
    (largest reduced cost) and switches to Bland's rule for good once
    `stall_limit` consecutive degenerate steps are seen. Ratio-test ties go to
    the lowest variable index.
    """

    name = "simplex"
    exact = True

    def __init__(self, tol: float = 1e-9, max_iterations: Optional[int] = None, verbose: bool = False,
                 stall_limit: int = 50, crash: bool = True):
        super().__init__(tol=tol, max_iterations=max_iterations, verbose=verbose)
        self.stall_limit = stall_limit
        self.crash = crash

    def iteration_cap(self, lp: PackingLp) -> int:
        return self.max_iterations if self.max_iterations is not None else 50 * (lp.m + lp.n)

    def _crash(self, lp: PackingLp, at_upper: np.ndarray) -> None:
        # Greedy by value density; keeps every slack >= 0 so the slack basis stays feasible.
        colsum = np.asarray(lp.A.sum(axis=0)).reshape(-1)
        density = lp.c / np.maximum(colsum, 1e-12)
        order = np.argsort(-density, kind="stable")
        slack = lp.b.copy()
        indptr, indices, data = lp.A.indptr, lp.A.indices, lp.A.data
        for j in order:
            if lp.c[j] <= 0:
                continue
            rows = indices[indptr[j]:indptr[j + 1]]
            vals = data[indptr[j]:indptr[j + 1]]
            if np.all(slack[rows] - vals >= 0):
                slack[rows] -= vals
                at_upper[j] = True

    def _solve(self, lp: PackingLp) -> tuple:
        m, n = lp.m, lp.n
        A, b, c = lp.A, lp.b, lp.c
        tol = self.tol
        if m > SIMPLEX_SOFT_MAX_ROWS:
            logger.warning("Simplex: m=%d exceeds the dense-basis soft limit of %d", m, SIMPLEX_SOFT_MAX_ROWS)

        # variable ids: 0..n-1 structurals, n..n+m-1 slacks
        basis = np.arange(n, n + m)
        is_basic = np.zeros(n + m, dtype=bool)
        is_basic[basis] = True
        at_upper = np.zeros(n, dtype=bool)
        if self.crash:
            self._crash(lp, at_upper)
        B = np.eye(m)

        cap = self.iteration_cap(lp)
        use_bland = False
        stall = 0
        iterations = 0
        while True:
            try:
                lu = lu_factor(B, check_finite=False)
            except (ValueError, np.linalg.LinAlgError) as e:
                raise SolverError(self.name, f"basis factorization failed: {e}", iterations)

            x_nb = np.where(at_upper & ~is_basic[:n], 1.0, 0.0)
            x_B = lu_solve(lu, b - A @ x_nb, check_finite=False)
            c_B = np.where(basis < n, c[np.minimum(basis, n - 1)], 0.0)
            y = lu_solve(lu, c_B, trans=1, check_finite=False)
            d = c - A.T @ y
            d_slack = -y

            struct_nonbasic = ~is_basic[:n]
            eligible = struct_nonbasic & ((~at_upper & (d > tol)) | (at_upper & (d < -tol)))
            slack_eligible = ~is_basic[n:] & (d_slack > tol)
            if not eligible.any() and not slack_eligible.any():
                break
            if iterations >= cap:
                raise SolverError(self.name, f"iteration cap {cap} reached without optimality", iterations)

            if use_bland:
                candidates = np.flatnonzero(eligible)
                q = int(candidates[0]) if candidates.size else n + int(np.flatnonzero(slack_eligible)[0])
            else:
                score = np.where(eligible, np.abs(d), -1.0)
                slack_score = np.where(slack_eligible, d_slack, -1.0)
                best_struct = int(np.argmax(score))
                best_slack = int(np.argmax(slack_score))
                if slack_score[best_slack] > score[best_struct]:
                    q = n + best_slack
                else:
                    q = best_struct

            if q < n:
                a_q = A[:, q].toarray().reshape(-1)
                sigma = -1.0 if at_upper[q] else 1.0
                flip_limit = 1.0
                reduced = d[q]
            else:
                a_q = np.zeros(m)
                a_q[q - n] = 1.0
                sigma = 1.0
                flip_limit = np.inf
                reduced = d_slack[q - n]

            w = lu_solve(lu, a_q, check_finite=False)
            delta = sigma * w
            ub = np.where(basis < n, 1.0, np.inf)
            ratios = np.full(m, np.inf)
            dec = delta > tol
            inc = delta < -tol
            ratios[dec] = np.maximum(x_B[dec], 0.0) / delta[dec]
            inc_finite = inc & np.isfinite(ub)
            ratios[inc_finite] = np.maximum(ub[inc_finite] - x_B[inc_finite], 0.0) / -delta[inc_finite]
            t_rows = float(ratios.min()) if m else np.inf

            if not np.isfinite(t_rows) and not np.isfinite(flip_limit):
                raise SolverError(self.name, "unbounded direction in a bounded LP (numerical failure)", iterations)

            if flip_limit <= t_rows:
                at_upper[q] = not at_upper[q]
                step = flip_limit
                self._trace("Simplex: iter %d flip x%d to %s (d=%.3g)", iterations, q, int(at_upper[q]), reduced)
            else:
                ties = np.flatnonzero(ratios <= t_rows)
                r = int(ties[np.argmin(basis[ties])])
                leaving = int(basis[r])
                if leaving < n:
                    at_upper[leaving] = bool(delta[r] < 0)
                is_basic[leaving] = False
                is_basic[q] = True
                basis[r] = q
                B[:, r] = a_q
                if q < n:
                    at_upper[q] = False
                step = t_rows
                self._trace("Simplex: iter %d pivot in=%d out=%d step=%.3g (d=%.3g)",
                            iterations, q, leaving, step, reduced)

            iterations += 1
            if step <= tol:
                stall += 1
                if not use_bland and stall > self.stall_limit:
                    use_bland = True
                    logger.debug("Simplex: %d degenerate steps, switching to Bland's rule", stall)
            else:
                stall = 0

        x = np.where(at_upper, 1.0, 0.0)
        basic_struct = basis < n
        x[basis[basic_struct]] = np.clip(x_B[basic_struct], 0.0, 1.0)
        phi = np.maximum(y, 0.0)
        psi = np.where(~is_basic[:n] & at_upper, np.maximum(d, 0.0), 0.0)
        return x, phi, psi, iterations


# ============================================================================
# DUAL ASCENT (WATER-FILLING)
# ============================================================================

class DualAscentSolver(Solver):
    """
    Greedy water-filling on the dual prices. Experimental: alpha_d is measured
    after the fact, not certified.

    Start with phi = 0 and every column with c_j > 0 switched on. While some
    rows are over capacity, raise phi uniformly on those rows; a column
    switches off (for good) once its reduced cost c_j - a_j.phi reaches zero.
    Columns are processed in order of the raise at which they freeze, and a
    round ends as soon as one overloaded row fits. Loads only fall as phi
    rises, so a row that fits never overflows again and there are at most m
    rounds.

    psi_j = max(0, c_j - a_j.phi), so primal slackness holds with alpha_p = 1.
    """

    name = "dual-ascent"
    exact = False
    CHUNK = 4096

    def __init__(self, alpha_d: float = 1.0, tol: float = 1e-9, max_iterations: Optional[int] = None,
                 verbose: bool = False):
        super().__init__(tol=tol, max_iterations=max_iterations, verbose=verbose)
        if alpha_d < 1:
            raise SpecError(f"alpha_d must be >= 1, got {alpha_d}")
        self.alpha_d = float(alpha_d)

    def _solve(self, lp: PackingLp) -> tuple:
        A, b, c = lp.A, lp.b, lp.c
        cap = self.max_iterations if self.max_iterations is not None else 10_000
        phi = np.zeros(lp.m)
        active = c > 0
        loads = A @ active.astype(np.float64)
        rounds = 0
        while True:
            over = loads > b + self.tol
            if not over.any():
                break
            if rounds >= cap:
                raise SolverError(self.name, f"no convergence within {cap} rounds", rounds)
            rounds += 1

            reduced = c - A.T @ phi
            rate = A.T @ over.astype(np.float64)
            movable = np.flatnonzero(active & (rate > 0))
            if movable.size == 0:
                raise SolverError(self.name, "overloaded rows have no active columns", rounds)
            steps = np.maximum(reduced[movable], 0.0) / rate[movable]
            order = np.argsort(steps, kind="stable")
            movable, steps = movable[order], steps[order]

            over_rows = np.flatnonzero(over)
            excess = loads[over_rows] - b[over_rows]
            A_over = A[over_rows, :]
            stop = None
            for start in range(0, movable.size, self.CHUNK):
                block = movable[start:start + self.CHUNK]
                removed = np.cumsum(A_over[:, block].toarray(), axis=1)
                fits = removed >= excess[:, None] - self.tol
                hit = np.flatnonzero(fits.any(axis=0))
                if hit.size:
                    stop = start + int(hit[0])
                    break
                excess = excess - removed[:, -1]
            if stop is None:
                stop = movable.size - 1

            raise_by = steps[stop]
            frozen = movable[steps <= raise_by]
            phi[over_rows] += raise_by
            active[frozen] = False
            loads = A @ active.astype(np.float64)
            self._trace("Dual-ascent: round %d raised %d rows by %.4g, froze %d columns",
                        rounds, over_rows.size, raise_by, frozen.size)

        x = active.astype(np.float64)
        psi = np.maximum(c - A.T @ phi, 0.0) * active
        return x, phi, psi, rounds


# ============================================================================
# HiGHS ADAPTER
# ============================================================================

class HighsSolver(Solver):
    """Wraps scipy.optimize.linprog(method="highs"); duals come from its marginals."""

    name = "highs"
    exact = True

    def _solve(self, lp: PackingLp) -> tuple:
        res = linprog(-lp.c, A_ub=lp.A, b_ub=lp.b, bounds=(0.0, 1.0), method="highs")
        if res.status != 0:
            raise SolverError(self.name, f"HiGHS status {res.status}: {res.message}", int(getattr(res, "nit", 0)))
        x = np.asarray(res.x, dtype=np.float64)
        phi = np.maximum(-np.asarray(res.ineqlin.marginals, dtype=np.float64), 0.0)
        psi = np.maximum(-np.asarray(res.upper.marginals, dtype=np.float64), 0.0)
        return x, phi, psi, int(getattr(res, "nit", 0))


# ============================================================================
# REGISTRY
# ============================================================================

SOLVERS = {
    SimplexSolver.name: SimplexSolver,
    DualAscentSolver.name: DualAscentSolver,
    HighsSolver.name: HighsSolver,
}


def available_solvers() -> list:
    return sorted(SOLVERS)


def get_solver(name: str, **options) -> Solver:
    try:
        cls = SOLVERS[name]
    except KeyError:
        raise SpecError(f"unknown solver '{name}', expected one of {', '.join(available_solvers())}")
    return cls(**options)


def simplex_solve(lp: PackingLp, tol: float = 1e-9, **options) -> SolverOutcome:
    return SimplexSolver(tol=tol, **options).solve(lp)


def dual_ascent_solve(lp: PackingLp, delta: float, **options) -> SolverOutcome:
    """
    alpha_d = 1 + delta is the value the caller will scale sample LPs by.
    Use DualAscentSolver() directly for the undeclared alpha_d = 1 default.
    """
    if not delta > 0:
        raise SpecError(f"delta must be > 0, got {delta}")
    return DualAscentSolver(alpha_d=1.0 + delta, **options).solve(lp)
