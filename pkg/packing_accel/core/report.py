from dataclasses import dataclass, fields
from typing import Optional

from packing_accel.core.lp import relative_error

# Stable CSV column order; see docs/ARCHITECTURE.md.
REPORT_COLUMNS = (
    "instance", "kind", "m", "n", "p", "instance_seed", "trial_index", "method",
    "eps_s", "eps_f_used", "alpha_d", "clones_K", "clones_k", "objective",
    "opt_reference", "relative_error", "solve_time", "threshold_time",
    "total_time", "speedup", "feasible", "fallback", "baseline_available",
)


@dataclass
class RunReport:
    """Per-run metrics of one full, accelerated or cloned solve."""

    instance: str = ""
    kind: str = ""
    m: int = 0
    n: int = 0
    p: Optional[float] = None
    instance_seed: Optional[int] = None
    trial_index: int = 0
    method: str = "accelerate"
    eps_s: Optional[float] = None
    eps_f_used: Optional[float] = None
    alpha_d: Optional[float] = None
    clones_K: Optional[int] = None
    clones_k: Optional[int] = None
    objective: float = 0.0
    opt_reference: Optional[float] = None
    relative_error: Optional[float] = None
    solve_time: float = 0.0
    threshold_time: float = 0.0
    total_time: float = 0.0
    speedup: Optional[float] = None
    feasible: bool = True
    fallback: bool = False
    baseline_available: bool = True

    def with_reference(self, opt: Optional[float], baseline_time: Optional[float]) -> "RunReport":
        """Fills relative_error and speedup from a full-solve reference."""
        self.opt_reference = opt
        self.relative_error = relative_error(self.objective, opt) if opt is not None and opt > 0 else None
        if baseline_time is not None and self.total_time > 0:
            self.speedup = baseline_time / self.total_time
        return self

    def as_row(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

