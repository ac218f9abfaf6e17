"""
Exception hierarchy shared by every packing_accel module.

Report-style operations (feasibility and slackness checks) never raise on an
infeasible input; they return flags. Everything else raises one of these.
"""

from typing import Optional, Sequence


class PackingError(Exception):
    """Base class for all packing_accel errors."""


class DimensionError(PackingError):
    """A vector or index set does not match the instance dimensions."""


class InvalidReferenceError(PackingError):
    """A reference objective (OPT) is not usable, e.g. not positive."""


class ValidationError(PackingError):
    """An instance, solution or configuration violates an invariant."""


class ParseError(ValidationError):
    def __init__(self, message: str, line: Optional[int] = None, path: Optional[str] = None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class SpecError(PackingError):
    """Inconsistent generator spec, accelerator config or bench plan."""


class SolverError(PackingError):
    def __init__(self, solver: str, message: str, iterations: int = 0):
        self.solver = solver
        self.iterations = iterations
        super().__init__(f"{solver}: {message} (after {iterations} iterations)")


class AcceleratorError(PackingError):
    """Every schedule point of the feasibility search failed in the solver."""

    def __init__(self, diagnostics: Sequence[tuple]):
        self.diagnostics = list(diagnostics)
        lines = "; ".join(f"eps_f={ef:g}: {msg}" for ef, msg in self.diagnostics)
        super().__init__(f"solver failed on every schedule point: {lines}")


class CloningError(PackingError):
    """All clones of a speculative run failed."""

    def __init__(self, diagnostics: Sequence[tuple]):
        self.diagnostics = list(diagnostics)
        lines = "; ".join(f"clone {cid}: {msg}" for cid, msg in self.diagnostics)
        super().__init__(f"all clones failed: {lines}")


class ReportError(PackingError):
    """A report could not be written or read back."""


class RunCancelled(PackingError):
    """The caller asked a feasibility search to stop before it finished."""
