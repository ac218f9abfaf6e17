"""
Bench Module

Runs sweeps that compare full solves against the accelerator and the cloned
accelerator, one RunReport per measured run.

Protocol per cell and trial:
    1. generate the trial instance (seed derived from the master seed)
    2. full solve with the baseline solver: reference OPT and baseline time
       (skipped above the nnz budget or on solver/memory failure, in which
       case the trial's rows carry baseline_available = false)
    3. every accelerated method at every eps_s, with its own derived seed

Cells run one after another so that no timed run competes for cores with
another; only the cloning method is internally concurrent.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from packing_accel.config import DEFAULT_EF_SCHEDULE, AcceleratorConfig, load_key_values, parse_schedule, split_list
from packing_accel.core.accelerator import run_schedule
from packing_accel.core.cloning import run_clones, StragglerModel
from packing_accel.core.generators import GeneratorSpec, generate, spec_from_mapping
from packing_accel.core.helpers import derive_seed, now
from packing_accel.core.lp import PackingLp
from packing_accel.core.report import RunReport
from packing_accel.core.solvers import get_solver
from packing_accel.errors import SolverError, SpecError

logger = logging.getLogger(__name__)

METHODS = ("full", "accelerate", "clones")

# labels folded into the master seed
INSTANCE_LABEL = 0x1A
RUN_LABEL = 0x2B


@dataclass(frozen=True)
class BenchPlan:
    cells: tuple = (GeneratorSpec(),)
    eps_s: tuple = (0.01,)
    methods: tuple = ("full", "accelerate")
    trials: int = 20
    master_seed: int = 0
    solver: str = "simplex"
    baseline_solver: str = "simplex"
    ef_schedule: tuple = DEFAULT_EF_SCHEDULE
    alpha_d: Optional[float] = None
    resample_per_ef: bool = True
    clones_K: tuple = (8,)
    clones_k: int = 4
    clone_mode: str = "full"
    straggler: str = "off"
    # full solves on instances with more nonzeros are not attempted
    baseline_max_nnz: Optional[int] = None
    warmup: bool = True

    def __post_init__(self):
        if not self.cells:
            raise SpecError("a bench plan needs at least one cell")
        if self.trials < 1:
            raise SpecError(f"trials must be >= 1, got {self.trials}")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown or not self.methods:
            raise SpecError(f"methods must be a non-empty subset of {METHODS}, got {self.methods}")
        for value in self.eps_s:
            if not 0 < value <= 1:
                raise SpecError(f"eps_s values must lie in (0, 1], got {value}")
        if "clones" in self.methods and any(not 1 <= self.clones_k <= K for K in self.clones_K):
            raise SpecError("clone counts must satisfy 1 <= k <= K for every K")
        StragglerModel.parse(self.straggler)

    def accelerator_config(self, eps_s: float, seed: int) -> AcceleratorConfig:
        return AcceleratorConfig(eps_s=eps_s, ef_schedule=self.ef_schedule, alpha_d=self.alpha_d, seed=seed,
                                 resample_per_ef=self.resample_per_ef, solver=self.solver)


# ============================================================================
# PLAN CONSTRUCTION
# ============================================================================

PLAN_INT_KEYS = ("trials", "master_seed", "clones.k", "baseline_max_nnz")


def plan_from_mapping(values: dict) -> BenchPlan:
    """
    Builds a plan from key-value settings. Generator keys (`kind`, `m`, `n`,
    `p`, ...) describe the single cell; `shapes = 20:20000, 40:40000` turns
    it into one cell per `m:n` shape sharing the other generator keys.
    """
    plan, spec_values = {}, {}
    shapes = None
    for key, raw in values.items():
        if key in PLAN_INT_KEYS:
            plan[key.replace("clones.", "clones_")] = int(raw)
        elif key == "eps_s":
            plan["eps_s"] = tuple(float(v) for v in split_list(raw))
        elif key == "methods":
            plan["methods"] = tuple(split_list(raw))
        elif key == "clones.K":
            plan["clones_K"] = tuple(int(v) for v in split_list(raw))
        elif key in ("clones.mode", "clones.straggler"):
            plan["clone_mode" if key == "clones.mode" else "straggler"] = raw
        elif key in ("solver", "baseline_solver"):
            plan[key] = raw
        elif key == "ef_schedule":
            plan["ef_schedule"] = parse_schedule(raw)
        elif key == "alpha_d":
            plan["alpha_d"] = float(raw)
        elif key in ("resample_per_ef", "warmup"):
            plan[key] = raw.lower() in ("1", "true", "yes", "on")
        elif key == "shapes":
            shapes = [tuple(int(v) for v in shape.split(":")) for shape in split_list(raw)]
        else:
            spec_values[key] = raw
    base = spec_from_mapping(spec_values)
    if shapes:
        plan["cells"] = tuple(replace(base, m=m, n=n) for m, n in shapes)
    else:
        plan["cells"] = (base,)
    try:
        return BenchPlan(**plan)
    except (TypeError, ValueError) as e:
        raise SpecError(f"invalid bench plan: {e}")


def load_plan(path: str) -> BenchPlan:
    try:
        return plan_from_mapping(load_key_values(path))
    except ValueError as e:
        raise SpecError(f"{path}: {e}")


def scaling_plan(ms, ratio: int = 1000, p: float = 0.8, **options) -> BenchPlan:
    """Random cells with n = ratio * m for each m, so n/m stays fixed while m grows."""
    cells = tuple(GeneratorSpec(kind="random", m=int(m), n=int(m) * ratio, p=p) for m in ms)
    return BenchPlan(cells=cells, **options)


# ============================================================================
# RUNNING
# ============================================================================

@dataclass
class Baseline:
    objective: Optional[float] = None
    total_time: Optional[float] = None
    report: Optional[RunReport] = None

    @property
    def available(self) -> bool:
        return self.objective is not None


def _base_report(lp: PackingLp, spec: GeneratorSpec, trial: int, method: str) -> RunReport:
    return RunReport(instance=spec.fingerprint(), kind=spec.kind, m=lp.m, n=lp.n,
                     p=spec.p if spec.kind == "random" else None, instance_seed=spec.seed,
                     trial_index=trial, method=method)


def run_baseline(lp: PackingLp, spec: GeneratorSpec, trial: int, plan: BenchPlan) -> Baseline:
    if plan.baseline_max_nnz is not None and lp.nnz > plan.baseline_max_nnz:
        logger.warning("Bench: %s has %d nonzeros, over the baseline budget of %d; baseline unavailable",
                       spec.fingerprint(), lp.nnz, plan.baseline_max_nnz)
        return Baseline()
    solver = get_solver(plan.baseline_solver)
    started = now()
    try:
        outcome = solver.solve(lp)
    except (SolverError, MemoryError) as e:
        logger.warning("Bench: full solve failed on %s: %s; baseline unavailable", spec.fingerprint(), e)
        return Baseline()
    total_time = now() - started

    report = _base_report(lp, spec, trial, "full")
    report.alpha_d = outcome.alpha_d
    report.objective = outcome.primal.objective
    report.solve_time = outcome.wall_time
    report.total_time = total_time
    return Baseline(objective=outcome.primal.objective, total_time=total_time, report=report)


def run_accelerate(lp: PackingLp, spec: GeneratorSpec, trial: int, plan: BenchPlan, eps_s: float,
                   seed: int) -> RunReport:
    run = run_schedule(lp, get_solver(plan.solver), plan.accelerator_config(eps_s, seed))
    report = _base_report(lp, spec, trial, "accelerate")
    for name in ("eps_s", "eps_f_used", "alpha_d", "objective", "solve_time", "threshold_time",
                 "total_time", "feasible", "fallback"):
        setattr(report, name, getattr(run.report, name))
    return report


def run_cloned(lp: PackingLp, spec: GeneratorSpec, trial: int, plan: BenchPlan, eps_s: float,
               seed: int, K: int) -> RunReport:
    config = plan.accelerator_config(eps_s, seed)
    solver = get_solver(plan.solver)
    # virtual selection keeps objectives independent of thread timing
    best, first_k = run_clones(lp, solver, config, K, plan.clones_k,
                               straggler=StragglerModel.parse(plan.straggler), master_seed=seed, mode=plan.clone_mode,
                               selection="virtual")
    # the answer is ready once the k-th clone in virtual order is done; clone
    # wall times start before the injected delay
    total_time = max(r.wall_time for r in first_k)

    report = _base_report(lp, spec, trial, "clones")
    report.eps_s = eps_s
    report.eps_f_used = best.eps_f_used
    report.alpha_d = solver.alpha_d if plan.alpha_d is None else plan.alpha_d
    report.clones_K = K
    report.clones_k = plan.clones_k
    report.objective = best.objective
    report.solve_time = best.solve_time
    report.threshold_time = best.threshold_time
    report.total_time = total_time
    report.feasible = best.feasible
    report.fallback = best.fallback
    return report


def _warm_up(plan: BenchPlan) -> None:
    spec = plan.cells[0]
    small = replace(spec, n=min(spec.n, 200)) if spec.kind == "random" else spec
    lp = generate(small)
    run_schedule(lp, get_solver(plan.solver), plan.accelerator_config(max(plan.eps_s), 0))
    logger.debug("Bench: warm-up run on %s done", small.fingerprint())


def run_experiment(plan: BenchPlan) -> list:
    """Runs every (cell, trial, eps_s, method) of the plan and returns the rows in run order."""
    if plan.warmup:
        _warm_up(plan)

    reports = []
    for cell_index, cell in enumerate(plan.cells):
        for trial in range(plan.trials):
            spec = cell.with_seed(derive_seed(plan.master_seed, INSTANCE_LABEL, cell_index, cell.seed, trial))
            lp = generate(spec)
            baseline = run_baseline(lp, spec, trial, plan)
            logger.info("Bench: cell %d trial %d %s baseline=%s", cell_index, trial, spec.fingerprint(),
                        "n/a" if not baseline.available else f"{baseline.objective:.10g}")
            if "full" in plan.methods and baseline.available:
                reports.append(baseline.report)

            trial_rows = []
            for eps_index, eps_s in enumerate(plan.eps_s):
                seed = derive_seed(plan.master_seed, RUN_LABEL, cell_index, trial, eps_index)
                if "accelerate" in plan.methods:
                    trial_rows.append(run_accelerate(lp, spec, trial, plan, eps_s, seed))
                if "clones" in plan.methods:
                    for K in plan.clones_K:
                        trial_rows.append(run_cloned(lp, spec, trial, plan, eps_s, seed, K))

            for report in trial_rows:
                report.baseline_available = baseline.available
                if baseline.available:
                    report.with_reference(baseline.objective, baseline.total_time)
            reports.extend(trial_rows)
    logger.info("Bench: %d rows from %d cells x %d trials", len(reports), len(plan.cells), plan.trials)
    return reports


# ============================================================================
# SUMMARIES
# ============================================================================

SUMMARY_KEY = ("kind", "m", "n", "method", "eps_s", "clones_K")
SUMMARY_COLUMNS = SUMMARY_KEY + (
    "runs", "relative_error_mean", "relative_error_std", "speedup_mean", "speedup_std",
    "total_time_mean", "total_time_std", "feasible_rate", "fallback_rate",
)


def _mean_std(values: list) -> tuple:
    if not values:
        return None, None
    array = np.asarray(values, dtype=np.float64)
    return float(array.mean()), float(array.std(ddof=1)) if array.size > 1 else 0.0


def summarize(reports: list) -> list:
    """Mean and sample standard deviation per (cell shape, method, eps_s, K), in first-seen order."""
    groups = {}
    for report in reports:
        key = (report.kind, report.m, report.n, report.method, report.eps_s, report.clones_K)
        groups.setdefault(key, []).append(report)

    rows = []
    for key, group in groups.items():
        row = dict(zip(SUMMARY_KEY, key))
        row["runs"] = len(group)
        for name in ("relative_error", "speedup", "total_time"):
            mean, std = _mean_std([getattr(r, name) for r in group if getattr(r, name) is not None])
            row[f"{name}_mean"], row[f"{name}_std"] = mean, std
        row["feasible_rate"] = sum(r.feasible for r in group) / len(group)
        row["fallback_rate"] = sum(r.fallback for r in group) / len(group)
        rows.append(row)
    return rows


def mean_of(rows: list, method: str, column: str, **match) -> float:
    """Convenience lookup into summarize() output; NaN when no row matches."""
    for row in rows:
        if row["method"] == method and all(row.get(k) == v for k, v in match.items()):
            value = row[column]
            return math.nan if value is None else value
    return math.nan
