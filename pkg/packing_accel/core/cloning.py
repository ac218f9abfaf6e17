"""
Cloning Module

Speculative execution of the accelerator: K independent clones run
concurrently, each on its own sample and RNG stream, and the coordinator
keeps the best feasible answer among the first k to complete.

Threading Model:
    - Coordinator thread: submits the clones, consumes completions in order,
      stops after k successes and performs the deterministic reduction
      (max objective, lowest clone id on ties).
    - Worker threads: one clone each; the instance is shared read-only,
      everything else (sample, solver copy, RNG) belongs to the clone.
    Abandoned clones see the shared cancel event: a delayed clone wakes at
    once, and a running feasibility search stops before its next eps_f
    point. Anything a clone finishes afterwards is discarded.
"""

import copy
import logging
import threading
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from packing_accel.config import AcceleratorConfig, CloneConfig
from packing_accel.core.accelerator import accelerate_once, run_schedule
from packing_accel.core.context import CloneContext
from packing_accel.core.helpers import clone_seed, derive_seed, make_rng, now
from packing_accel.core.lp import PackingLp, check_feasible, objective
from packing_accel.core.solvers import Solver, get_solver
from packing_accel.errors import CloningError, PackingError, RunCancelled, SpecError

logger = logging.getLogger(__name__)

FALLBACK_CLONE_ID = -1


@dataclass(frozen=True)
class CloneResult:
    clone_id: int
    x_hat: Optional[np.ndarray]
    objective: float
    feasible: bool
    wall_time: float
    seed: int
    eps_f_used: Optional[float] = None
    solve_time: float = 0.0
    threshold_time: float = 0.0
    iterations: int = 0
    delay: float = 0.0
    fallback: bool = False
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None


# ============================================================================
# STRAGGLER INJECTION
# ============================================================================

class StragglerModel:
    """
    Test hook that delays clones to emulate contention.

        off                      no delay
        fixed:<clone_id>:<sec>   one clone waits <sec> seconds
        pareto:<shape>:<sec>     every clone waits sec * Lomax(shape), seeded per clone
    """

    def __init__(self, kind: str = "off", clone_id: int = 0, seconds: float = 0.0, shape: float = 2.0):
        if kind not in ("off", "fixed", "pareto"):
            raise SpecError(f"unknown straggler model '{kind}'")
        if seconds < 0 or shape <= 0:
            raise SpecError("straggler delays need seconds >= 0 and shape > 0")
        self.kind = kind
        self.clone_id = clone_id
        self.seconds = seconds
        self.shape = shape

    @classmethod
    def parse(cls, spec: Optional[str]) -> "StragglerModel":
        if not spec or spec == "off":
            return cls()
        parts = spec.split(":")
        try:
            if parts[0] == "fixed" and len(parts) == 3:
                return cls("fixed", clone_id=int(parts[1]), seconds=float(parts[2]))
            if parts[0] == "pareto" and len(parts) == 3:
                return cls("pareto", shape=float(parts[1]), seconds=float(parts[2]))
        except ValueError:
            pass
        raise SpecError(f"cannot parse straggler spec '{spec}' (off | fixed:<id>:<sec> | pareto:<shape>:<sec>)")

    def delay_for(self, clone_id: int, seed: int) -> float:
        if self.kind == "fixed":
            return self.seconds if clone_id == self.clone_id else 0.0
        if self.kind == "pareto":
            return float(self.seconds * make_rng(derive_seed(seed, 0x5747)).pareto(self.shape))
        return 0.0

    def __repr__(self):
        return f"StragglerModel(kind={self.kind!r}, clone_id={self.clone_id}, seconds={self.seconds}, shape={self.shape})"


# ============================================================================
# CLONE EXECUTION
# ============================================================================

def _run_clone(ctx: CloneContext, lp: PackingLp, solver: Solver, config: AcceleratorConfig,
               mode: str) -> Optional[CloneResult]:
    started = now()
    if ctx.straggle():
        return None
    clone_config = replace(config, seed=ctx.seed)
    try:
        if mode == "full":
            run = run_schedule(lp, solver, clone_config, should_stop=ctx.cancelled)
            x_hat, eps_f_used, fallback = run.x_hat, run.eps_f_used, run.fallback
            solve_time, threshold_time = run.report.solve_time, run.report.threshold_time
            iterations = run.iterations
            feasible = run.report.feasible
        else:
            eps_f_used = clone_config.ef_schedule[0]
            core = accelerate_once(lp, solver, clone_config.eps_s, eps_f_used, make_rng(ctx.seed),
                                   alpha_d=clone_config.alpha_d, threshold_workers=clone_config.threshold_workers)
            x_hat, fallback = core.x_hat, False
            solve_time, threshold_time = core.solve_time, core.threshold_time
            iterations = core.outcome.iterations
            feasible = check_feasible(lp, x_hat, tol=clone_config.tol).feasible
    except RunCancelled:
        logger.debug("Clones: clone %d abandoned mid-search", ctx.clone_id)
        return None
    except PackingError as e:
        logger.warning("Clones: clone %d failed: %s", ctx.clone_id, e)
        return CloneResult(clone_id=ctx.clone_id, x_hat=None, objective=0.0, feasible=False,
                           wall_time=now() - started, seed=ctx.seed, delay=ctx.delay, error=str(e))
    if ctx.cancelled():
        return None
    return CloneResult(
        clone_id=ctx.clone_id,
        x_hat=x_hat,
        objective=objective(lp, x_hat),
        feasible=feasible,
        wall_time=now() - started,
        seed=ctx.seed,
        eps_f_used=eps_f_used,
        solve_time=solve_time,
        threshold_time=threshold_time,
        iterations=iterations,
        delay=ctx.delay,
        fallback=fallback,
    )


def _best_of(lp: PackingLp, first_k: list) -> CloneResult:
    feasible = [r for r in first_k if r.feasible]
    if feasible:
        return max(feasible, key=lambda r: (r.objective, -r.clone_id))
    logger.warning("Clones: none of the first %d clones is feasible, returning the all-zeros solution", len(first_k))
    zeros = np.zeros(lp.n)
    zeros.setflags(write=False)
    return CloneResult(clone_id=FALLBACK_CLONE_ID, x_hat=zeros, objective=0.0, feasible=True,
                       wall_time=0.0, seed=0, eps_f_used=1.0, fallback=True)


def run_clones(lp: PackingLp, solver: Optional[Solver], config: AcceleratorConfig, K: int, k: int,
               straggler: Optional[StragglerModel] = None, master_seed: Optional[int] = None,
               mode: str = "full", selection: str = "completion", workers: Optional[int] = None) -> tuple:
    """
    Runs K clones and returns (best, completed), where `completed` holds the
    first k successful clones in completion order. Clone i uses seed
    master_seed XOR splitmix64(i); master_seed defaults to config.seed.
    """
    clones = CloneConfig(K=K, k=k, master_seed=config.seed if master_seed is None else master_seed,
                         mode=mode, selection=selection, workers=workers)
    if solver is None:
        solver = get_solver(config.solver)
    straggler = straggler or StragglerModel()
    cancel = threading.Event()
    contexts = []
    for clone_id in range(K):
        seed = clone_seed(clones.master_seed, clone_id)
        contexts.append(CloneContext(clone_id=clone_id, seed=seed, delay=straggler.delay_for(clone_id, seed),
                                     cancel=cancel))

    started = now()
    completed, failures = [], []
    pool = ThreadPoolExecutor(max_workers=clones.max_workers, thread_name_prefix="clone")
    try:
        futures = [pool.submit(_run_clone, ctx, lp, copy.copy(solver), config, clones.mode) for ctx in contexts]
        for future in as_completed(futures):
            result = future.result()
            if result is None:
                continue
            if result.failed:
                failures.append((result.clone_id, result.error))
                continue
            completed.append(result)
            if clones.selection == "completion" and len(completed) == k:
                break
    finally:
        cancel.set()
        pool.shutdown(wait=False, cancel_futures=True)

    if not completed:
        raise CloningError(failures)
    if clones.selection == "virtual":
        completed.sort(key=lambda r: (r.delay, r.iterations, r.clone_id))
    first_k = completed[:k]
    best = _best_of(lp, first_k)
    logger.info("Clones: best of first %d/%d is clone %d, objective %.10g, %.4fs",
                len(first_k), K, best.clone_id, best.objective, now() - started)
    return best, tuple(first_k)


def run_clone_config(lp: PackingLp, solver: Optional[Solver], config: AcceleratorConfig,
                     clones: CloneConfig) -> tuple:
    return run_clones(lp, solver, config, clones.K, clones.k, straggler=StragglerModel.parse(clones.straggler),
                      master_seed=clones.master_seed, mode=clones.mode, selection=clones.selection,
                      workers=clones.workers)
