"""
Packing LP Module

Instance representation, feasibility checking, objective evaluation and the
metric definitions shared by every other module.

    maximize    sum_j c_j x_j
    subject to  sum_j a_ij x_j <= b_i      i in [m]
                0 <= x_j <= 1              j in [n]

with A in [0,1]^{m x n}, b >= 0 and c >= 0. The constraint matrix is stored
column-major (scipy CSC) because both the thresholding rule and the dual
constraint checks walk columns.
"""

import hashlib
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
import scipy.sparse as sp

from packing_accel.core.helpers import make_rng
from packing_accel.errors import DimensionError, InvalidReferenceError, ValidationError

DEFAULT_TOL = 1e-7


class PackingLp:
    """Immutable sparse packing LP instance."""

    __slots__ = ("m", "n", "A", "b", "c")

    def __init__(self, A, b, c):
        A = sp.csc_matrix(A, dtype=np.float64, copy=True)
        A.sort_indices()
        b = np.array(b, dtype=np.float64).reshape(-1)
        c = np.array(c, dtype=np.float64).reshape(-1)
        m, n = A.shape
        if m < 1 or n < 1:
            raise ValidationError(f"instance needs m >= 1 and n >= 1, got m={m}, n={n}")
        if b.shape != (m,):
            raise DimensionError(f"b has length {b.size}, expected m={m}")
        if c.shape != (n,):
            raise DimensionError(f"c has length {c.size}, expected n={n}")
        if A.nnz and (np.any(A.data < 0) or np.any(A.data > 1) or not np.all(np.isfinite(A.data))):
            raise ValidationError("every a_ij must lie in [0, 1]")
        if np.any(~np.isfinite(b)) or np.any(b < 0):
            raise ValidationError("every b_i must be a finite non-negative number")
        if np.any(~np.isfinite(c)) or np.any(c < 0):
            raise ValidationError("every c_j must be a finite non-negative number")
        for array in (A.data, A.indices, A.indptr, b, c):
            array.setflags(write=False)
        object.__setattr__(self, "m", int(m))
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    def __setattr__(self, name, value):
        raise AttributeError("PackingLp is immutable")

    # ------------------------------------------------------------------
    # constructors
    # ------------------------------------------------------------------

    @classmethod
    def from_entries(cls, m: int, n: int, entries: Iterable[tuple], b, c) -> "PackingLp":
        """Builds an instance from (i, j, a_ij) triples; duplicate pairs are rejected."""
        triples = list(entries)
        rows = np.array([t[0] for t in triples], dtype=np.int64)
        cols = np.array([t[1] for t in triples], dtype=np.int64)
        vals = np.array([t[2] for t in triples], dtype=np.float64)
        return cls.from_coo(m, n, rows, cols, vals, b, c)

    @classmethod
    def from_coo(cls, m: int, n: int, rows, cols, vals, b, c) -> "PackingLp":
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        if m < 1 or n < 1:
            raise ValidationError(f"instance needs m >= 1 and n >= 1, got m={m}, n={n}")
        if rows.size:
            if rows.min() < 0 or rows.max() >= m or cols.min() < 0 or cols.max() >= n:
                raise ValidationError("entry index out of range")
            keys = cols * m + rows
            if np.unique(keys).size != keys.size:
                raise ValidationError("duplicate (i, j) entries are not allowed")
        A = sp.csc_matrix((vals, (rows, cols)), shape=(m, n))
        return cls(A, b, c)

    @classmethod
    def from_dense(cls, A, b, c) -> "PackingLp":
        return cls(sp.csc_matrix(np.asarray(A, dtype=np.float64)), b, c)

    # ------------------------------------------------------------------
    # accessors
    # ------------------------------------------------------------------

    @property
    def nnz(self) -> int:
        return int(self.A.nnz)

    def column(self, j: int) -> tuple:
        """Row indices and values of column j, in O(nnz of the column)."""
        if not 0 <= j < self.n:
            raise DimensionError(f"column {j} out of range for n={self.n}")
        start, end = self.A.indptr[j], self.A.indptr[j + 1]
        return self.A.indices[start:end], self.A.data[start:end]

    def entries(self):
        """Yields (i, j, a_ij) in column-major order."""
        for j in range(self.n):
            rows, vals = self.column(j)
            for i, a in zip(rows, vals):
                yield int(i), j, float(a)

    def restrict(self, columns, rhs) -> "PackingLp":
        """Sub-instance on the given columns (relabelled 0..s-1) with a new right-hand side."""
        columns = np.asarray(columns, dtype=np.int64)
        return PackingLp(self.A[:, columns], rhs, self.c[columns])

    def perturbed(self, seed: int, scale: float = 1e-9) -> "PackingLp":
        """c_j <- c_j * (1 + u_j), u_j ~ U[0, scale]; breaks dual degeneracy."""
        u = make_rng(seed).random(self.n) * scale
        return PackingLp(self.A, self.b, self.c * (1.0 + u))

    def fingerprint(self) -> str:
        """
        First 16 hex digits of a SHA-256 over (m, n), indptr and indices as
        little-endian int64, then data, b and c as little-endian float64.
        """
        digest = hashlib.sha256()
        for array, dtype in (((self.m, self.n), "<i8"), (self.A.indptr, "<i8"), (self.A.indices, "<i8"),
                             (self.A.data, "<f8"), (self.b, "<f8"), (self.c, "<f8")):
            digest.update(np.ascontiguousarray(array, dtype=dtype).tobytes())
        return digest.hexdigest()[:16]

    def __eq__(self, other):
        if not isinstance(other, PackingLp):
            return NotImplemented
        return (
            self.m == other.m and self.n == other.n
            and np.array_equal(self.A.indptr, other.A.indptr)
            and np.array_equal(self.A.indices, other.A.indices)
            and np.array_equal(self.A.data, other.A.data)
            and np.array_equal(self.b, other.b)
            and np.array_equal(self.c, other.c)
        )

    __hash__ = None

    def __repr__(self):
        return f"PackingLp(m={self.m}, n={self.n}, nnz={self.nnz})"


@dataclass(frozen=True)
class PrimalSolution:
    x: np.ndarray
    objective: float


@dataclass(frozen=True)
class DualSolution:
    phi: np.ndarray
    psi: np.ndarray

    @property
    def y(self) -> np.ndarray:
        """phi followed by psi, the order dual files use."""
        return np.concatenate([self.phi, self.psi])


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    slack: np.ndarray
    worst_violation: float
    violated_rows: tuple
    box_ok: bool
    integral_ok: Optional[bool] = None

    def __bool__(self):
        return self.feasible


# ============================================================================
# OPERATIONS
# ============================================================================

def _as_vector(x, length: int, what: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape != (length,):
        raise DimensionError(f"{what} has length {x.size}, expected {length}")
    return x


def objective(lp: PackingLp, x) -> float:
    return float(lp.c @ _as_vector(x, lp.n, "x"))


def row_loads(lp: PackingLp, x) -> np.ndarray:
    return lp.A @ _as_vector(x, lp.n, "x")


def check_feasible(lp: PackingLp, x, tol: float = DEFAULT_TOL, integral: bool = False) -> FeasibilityReport:
    """
    Feasibility of x for the packing constraints and the [0,1] box.
    With `integral=True` every x_j must also be exactly 0 or 1.
    """
    if tol < 0:
        raise ValueError("tol must be non-negative")
    x = _as_vector(x, lp.n, "x")
    slack = lp.b - lp.A @ x
    violated = np.flatnonzero(slack < -tol)
    box_ok = bool(np.all(x >= -tol) and np.all(x <= 1 + tol))
    box_violation = max(0.0, float(-x.min()), float(x.max() - 1.0))
    worst = max(0.0, float(-slack.min()), box_violation)
    integral_ok = bool(np.all((x == 0.0) | (x == 1.0))) if integral else None
    feasible = violated.size == 0 and box_ok and (integral_ok is not False)
    slack.setflags(write=False)
    return FeasibilityReport(
        feasible=feasible,
        slack=slack,
        worst_violation=worst,
        violated_rows=tuple(int(i) for i in violated),
        box_ok=box_ok,
        integral_ok=integral_ok,
    )


def min_b(lp: PackingLp) -> float:
    """B := min_i b_i."""
    return float(lp.b.min())


def relative_error(obj: float, opt: float) -> float:
    """1 - Obj/OPT against a positive reference optimum."""
    if not opt > 0:
        raise InvalidReferenceError(f"reference optimum must be positive, got {opt}")
    return 1.0 - obj / opt


def dual_objective(lp: PackingLp, dual: DualSolution) -> float:
    return float(lp.b @ dual.phi + dual.psi.sum())
