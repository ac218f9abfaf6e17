import math
import os
import re
from dataclasses import dataclass, field
from typing import Optional

from packing_accel.errors import ParseError, SpecError


def ef_grid(step: float = 0.01, stop: float = 1.0) -> tuple:
    """Arithmetic eps_f schedule 0, step, 2*step, ... strictly below `stop`."""
    if not 0 < step < stop:
        raise SpecError(f"eps_f grid step must lie in (0, {stop}), got {step}")
    count = int(math.ceil(stop / step - 1e-9))
    return tuple(round(k * step, 12) for k in range(count) if k * step < stop)


DEFAULT_EF_SCHEDULE = ef_grid(0.01)


@dataclass
class RuntimeConfig:
    verbose: bool = False
    tol: float = 1e-7
    workers: int = os.cpu_count() or 1


@dataclass(frozen=True)
class AcceleratorConfig:
    eps_s: float = 0.01
    ef_schedule: tuple = DEFAULT_EF_SCHEDULE
    # None means: take alpha_d from the solver's declared contract
    alpha_d: Optional[float] = None
    seed: int = 0
    resample_per_ef: bool = True
    solver: str = "simplex"
    tol: float = 1e-7
    threshold_workers: int = 1
    # walk at most this many schedule points before falling back
    max_schedule_points: Optional[int] = None

    def __post_init__(self):
        if not 0 < self.eps_s <= 1:
            raise SpecError(f"eps_s must lie in (0, 1], got {self.eps_s}")
        if not self.ef_schedule:
            raise SpecError("ef_schedule must not be empty")
        schedule = tuple(float(v) for v in self.ef_schedule)
        for value in schedule:
            if not 0 <= value < 1:
                raise SpecError(f"eps_f values must lie in [0, 1), got {value}")
        if any(b <= a for a, b in zip(schedule, schedule[1:])):
            raise SpecError("ef_schedule must be strictly increasing")
        object.__setattr__(self, "ef_schedule", schedule)
        if self.alpha_d is not None and self.alpha_d < 1:
            raise SpecError(f"alpha_d must be >= 1, got {self.alpha_d}")
        if self.tol < 0:
            raise SpecError("tol must be non-negative")
        if self.threshold_workers < 1:
            raise SpecError("threshold_workers must be >= 1")
        if self.max_schedule_points is not None and self.max_schedule_points < 1:
            raise SpecError("max_schedule_points must be >= 1")

    @property
    def schedule(self) -> tuple:
        if self.max_schedule_points is None:
            return self.ef_schedule
        return self.ef_schedule[:self.max_schedule_points]


@dataclass(frozen=True)
class CloneConfig:
    K: int = 4
    k: int = 4
    master_seed: int = 0
    straggler: str = "off"
    mode: str = "full"
    selection: str = "completion"
    workers: Optional[int] = None

    def __post_init__(self):
        if not 1 <= self.k <= self.K:
            raise SpecError(f"clone counts must satisfy 1 <= k <= K, got k={self.k}, K={self.K}")
        if self.mode not in ("full", "core"):
            raise SpecError(f"unknown clone mode '{self.mode}'")
        if self.selection not in ("completion", "virtual"):
            raise SpecError(f"unknown clone selection '{self.selection}'")

    @property
    def max_workers(self) -> int:
        return min(self.workers or os.cpu_count() or 1, self.K)


# ============================================================================
# KEY-VALUE FILES
# ============================================================================

KEY_VALUE_RE = re.compile(r'^\s*([A-Za-z_][\w.]*)\s*=\s*(.*?)\s*$')


def read_text(path: str) -> str:
    """
    Whole file as UTF-8 text. Undecodable bytes raise ParseError with the
    line they sit on; OSError passes through.
    """
    with open(path, "rb") as handle:
        data = handle.read()
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise ParseError(f"invalid UTF-8 byte 0x{data[e.start]:02x}", line=data.count(b"\n", 0, e.start) + 1,
                         path=path)


def load_key_values(path: str) -> dict:
    """Reads `key = value` lines; blank lines and `#` comments are skipped."""
    values = {}
    for lineno, raw in enumerate(read_text(path).splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        match = KEY_VALUE_RE.match(line)
        if not match:
            raise ParseError(f"expected 'key = value', got {line!r}", line=lineno, path=path)
        values[match.group(1)] = match.group(2)
    return values


def split_list(value: str) -> list:
    return [part.strip() for part in value.split(",") if part.strip()]


def parse_schedule(value: str) -> tuple:
    """`0,0.05,0.1` or `grid:0.01`."""
    if value.startswith("grid:"):
        return ef_grid(float(value[len("grid:"):]))
    return tuple(float(v) for v in split_list(value))


# Global config instance
config = RuntimeConfig()
