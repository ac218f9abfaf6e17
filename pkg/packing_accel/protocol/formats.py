"""
Text formats for instances, solutions, duals and run reports.

Instance file (line-oriented, 0-based indices):
    m n nnz
    b_0 ... b_{m-1}
    c_0 ... c_{n-1}
    i j a_ij            (nnz lines)

Solution file: n lines, one x_j each. Dual file: m lines of phi followed by
n lines of psi. Every real is written with 17 significant digits, which is
enough for a double to survive a write/read cycle unchanged.
"""

import csv
import io
import re
from typing import Iterable, Optional

import numpy as np

from packing_accel.config import read_text
from packing_accel.core.lp import DualSolution, PackingLp
from packing_accel.core.report import REPORT_COLUMNS, RunReport
from packing_accel.errors import DimensionError, ParseError, ReportError

# Matches: <m> <n> <nnz>
HEADER_RE = re.compile(r'^\s*(\d+)\s+(\d+)\s+(\d+)\s*$')

# Matches: <i> <j> <a_ij>
ENTRY_RE = re.compile(r'^\s*(\d+)\s+(\d+)\s+(\S+)\s*$')


def format_real(value: float) -> str:
    return f"{float(value):.17g}"


def _parse_reals(line: str, expected: int, what: str, lineno: int, path: str) -> np.ndarray:
    parts = line.split()
    if len(parts) != expected:
        raise ParseError(f"expected {expected} {what} values, got {len(parts)}", line=lineno, path=path)
    try:
        return np.array([float(p) for p in parts], dtype=np.float64)
    except ValueError:
        raise ParseError(f"non-numeric {what} value", line=lineno, path=path)


# ============================================================================
# INSTANCES
# ============================================================================

def encode_instance(lp: PackingLp) -> str:
    lines = [
        f"{lp.m} {lp.n} {lp.nnz}",
        " ".join(format_real(v) for v in lp.b),
        " ".join(format_real(v) for v in lp.c),
    ]
    lines.extend(f"{i} {j} {format_real(a)}" for i, j, a in lp.entries())
    return "\n".join(lines) + "\n"


def write_instance(lp: PackingLp, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(encode_instance(lp))


def decode_instance(text: str, path: str = "<string>") -> PackingLp:
    """
    Parses an instance file.

    Raises ParseError (with the offending line) for structural problems and
    ValidationError for a_ij outside [0, 1] or a repeated (i, j) pair.
    """
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty instance file", line=1, path=path)

    match = HEADER_RE.match(lines[0])
    if not match:
        raise ParseError("expected header 'm n nnz'", line=1, path=path)
    m, n, nnz = (int(g) for g in match.groups())
    if len(lines) < 3:
        raise ParseError("missing b or c line", line=len(lines) + 1, path=path)
    b = _parse_reals(lines[1], m, "b", 2, path)
    c = _parse_reals(lines[2], n, "c", 3, path)

    body = [line for line in lines[3:]]
    while body and not body[-1].strip():
        body.pop()
    if len(body) != nnz:
        raise ParseError(f"header declares {nnz} entries, found {len(body)}", line=4 + min(len(body), nnz), path=path)

    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz, dtype=np.float64)
    for k, line in enumerate(body):
        match = ENTRY_RE.match(line)
        if not match:
            raise ParseError("expected entry 'i j a_ij'", line=4 + k, path=path)
        try:
            vals[k] = float(match.group(3))
        except ValueError:
            raise ParseError(f"non-numeric coefficient {match.group(3)!r}", line=4 + k, path=path)
        rows[k] = int(match.group(1))
        cols[k] = int(match.group(2))
    return PackingLp.from_coo(m, n, rows, cols, vals, b, c)


def read_instance(path: str) -> PackingLp:
    return decode_instance(read_text(path), path=path)


# ============================================================================
# SOLUTIONS AND DUALS
# ============================================================================

def write_vector(values: Iterable[float], path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.writelines(f"{format_real(v)}\n" for v in values)


def read_vector(path: str, length: Optional[int] = None) -> np.ndarray:
    values = []
    for lineno, raw in enumerate(read_text(path).splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            values.append(float(line))
        except ValueError:
            raise ParseError(f"expected one number per line, got {line!r}", line=lineno, path=path)
    vector = np.array(values, dtype=np.float64)
    if length is not None and vector.size != length:
        raise DimensionError(f"{path}: expected {length} values, found {vector.size}")
    return vector


def write_solution(x, path: str) -> None:
    write_vector(np.asarray(x, dtype=np.float64).reshape(-1), path)


def read_solution(path: str, n: Optional[int] = None) -> np.ndarray:
    return read_vector(path, n)


def write_duals(dual: DualSolution, path: str) -> None:
    write_vector(dual.y, path)


def read_duals(path: str, m: int, n: Optional[int] = None) -> DualSolution:
    values = read_vector(path, None if n is None else m + n)
    if values.size < m:
        raise DimensionError(f"{path}: expected at least m={m} dual values, found {values.size}")
    return DualSolution(phi=values[:m], psi=values[m:])


# ============================================================================
# RUN REPORTS (CSV)
# ============================================================================

INT_FIELDS = {"m", "n", "instance_seed", "trial_index", "clones_K", "clones_k"}
BOOL_FIELDS = {"feasible", "fallback", "baseline_available"}
STR_FIELDS = {"instance", "kind", "method"}


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_real(value)
    return str(value)


def write_rows(path: str, columns: Iterable[str], rows: Iterable[dict]) -> None:
    """Writes dict rows in the given column order; None becomes an empty cell."""
    columns = list(columns)
    try:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_format_cell(row.get(col)) for col in columns])
    except OSError as e:
        raise ReportError(f"cannot write {path}: {e}")


def emit_csv(reports: list, path: str) -> None:
    if not reports:
        raise ReportError("refusing to write an empty report list")
    write_rows(path, REPORT_COLUMNS, (r.as_row() for r in reports))


def _parse_cell(name: str, cell: str):
    if name in STR_FIELDS:
        return cell
    if cell == "":
        return None
    if name in BOOL_FIELDS:
        if cell not in ("true", "false"):
            raise ValueError(f"expected true/false, got {cell!r}")
        return cell == "true"
    if name in INT_FIELDS:
        return int(cell)
    return float(cell)


def read_csv(path: str) -> list:
    """Parses a CSV written by emit_csv back into RunReports."""
    reports = []
    try:
        with io.StringIO(read_text(path), newline="") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if header is None or tuple(header) != REPORT_COLUMNS:
                raise ParseError("unexpected report header", line=1, path=path)
            for lineno, cells in enumerate(reader, start=2):
                if len(cells) != len(REPORT_COLUMNS):
                    raise ParseError(f"expected {len(REPORT_COLUMNS)} cells, got {len(cells)}", line=lineno, path=path)
                try:
                    values = {name: _parse_cell(name, cell) for name, cell in zip(REPORT_COLUMNS, cells)}
                except ValueError as e:
                    raise ParseError(str(e), line=lineno, path=path)
                # objective and timings are never absent in an emitted report
                for name in ("objective", "solve_time", "threshold_time", "total_time", "trial_index", "m", "n"):
                    if values[name] is None:
                        raise ParseError(f"missing {name}", line=lineno, path=path)
                reports.append(RunReport(**values))
    except OSError as e:
        raise ReportError(f"cannot read {path}: {e}")
    return reports
