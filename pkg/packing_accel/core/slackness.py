"""
Approximate complementary slackness verifier.

For a primal x and a dual y = [phi, psi] of the bounded packing LP:

    primal:  x_j > 0    =>  c_j       <= a_j.phi + psi_j <= alpha_p * c_j
    dual:    phi_i > 0  =>  b_i/alpha_d <= a_i.x          <= b_i
             psi_j > 0  =>  1/alpha_d   <= x_j            <= 1

A solver meeting both is an (alpha_p * alpha_d)-approximation. Every failure
mode is a report field; nothing here raises on bad input values.
"""

from dataclasses import dataclass

import numpy as np

from packing_accel.core.lp import DualSolution, PackingLp, _as_vector


@dataclass(frozen=True)
class SlacknessReport:
    primal_ok: bool
    dual_ok: bool
    measured_alpha_p: float
    measured_alpha_d: float
    violating_indices: tuple
    primal_feasible: bool = True
    dual_feasible: bool = True

    @property
    def ok(self) -> bool:
        return self.primal_ok and self.dual_ok and self.primal_feasible and self.dual_feasible


def _tight_ratio(upper: np.ndarray, lower: np.ndarray, tol: float) -> float:
    """Smallest alpha >= 1 with upper <= alpha * lower (+tol) elementwise."""
    if upper.size == 0:
        return 1.0
    alpha = 1.0
    excess = upper > lower + tol
    if np.any(excess & (lower <= tol)):
        return float("inf")
    if np.any(excess):
        alpha = max(alpha, float(np.max((upper[excess] - tol) / lower[excess])))
    return alpha


def check_slackness(lp: PackingLp, x, y, alpha_p: float = 1.0, alpha_d: float = 1.0,
                    tol: float = 1e-7) -> SlacknessReport:
    """
    `y` is a DualSolution or a flat [phi, psi] vector of length m + n.
    Indices in `violating_indices` are tagged ("primal", j), ("row", i) or ("box", j).
    """
    x = _as_vector(x, lp.n, "x")
    if isinstance(y, DualSolution):
        phi = _as_vector(y.phi, lp.m, "phi")
        psi = _as_vector(y.psi, lp.n, "psi")
    else:
        flat = _as_vector(y, lp.m + lp.n, "y")
        phi, psi = flat[:lp.m], flat[lp.m:]

    loads = lp.A @ x
    priced = lp.A.T @ phi + psi
    primal_feasible = bool(np.all(loads <= lp.b + tol) and np.all(x >= -tol) and np.all(x <= 1 + tol))
    dual_feasible = bool(np.all(phi >= -tol) and np.all(psi >= -tol) and np.all(priced >= lp.c - tol))

    violations = []

    # primal condition over the support of x
    support = np.flatnonzero(x > tol)
    low = priced[support] < lp.c[support] - tol
    high = priced[support] > alpha_p * lp.c[support] + tol
    violations += [("primal", int(j)) for j in support[low | high]]
    measured_alpha_p = _tight_ratio(priced[support], lp.c[support], tol)

    # dual condition over the support of phi and psi
    rows = np.flatnonzero(phi > tol)
    row_low = loads[rows] < lp.b[rows] / alpha_d - tol
    row_high = loads[rows] > lp.b[rows] + tol
    violations += [("row", int(i)) for i in rows[row_low | row_high]]
    boxes = np.flatnonzero(psi > tol)
    box_low = x[boxes] < 1.0 / alpha_d - tol
    box_high = x[boxes] > 1.0 + tol
    violations += [("box", int(j)) for j in boxes[box_low | box_high]]
    measured_alpha_d = max(
        _tight_ratio(lp.b[rows], loads[rows], tol),
        _tight_ratio(np.ones(boxes.size), x[boxes], tol),
    )

    primal_ok = not np.any(low | high)
    dual_ok = not (np.any(row_low | row_high) or np.any(box_low | box_high))
    return SlacknessReport(
        primal_ok=bool(primal_ok),
        dual_ok=bool(dual_ok),
        measured_alpha_p=measured_alpha_p,
        measured_alpha_d=measured_alpha_d,
        violating_indices=tuple(violations),
        primal_feasible=primal_feasible,
        dual_feasible=dual_feasible,
    )
