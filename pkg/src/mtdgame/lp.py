"""Exact linear programming core.

Thin contract over scipy's HiGHS dual simplex: maximize a linear form
subject to linear equalities/inequalities and variable bounds, returning
an optimal vertex solution or a distinct infeasible/unbounded status.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

FEASIBILITY_TOL = 1e-7
DEFAULT_MAX_PIVOTS = 200_000


class LpError(RuntimeError):
    """Numerical failure or pivot-budget exhaustion inside the LP solver."""


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    x: np.ndarray | None
    value: float | None


def lp_maximize(
    c,
    a_ub=None,
    b_ub=None,
    a_eq=None,
    b_eq=None,
    bounds=None,
    max_pivots: int = DEFAULT_MAX_PIVOTS,
) -> LpSolution:
    """Maximize c.x s.t. a_ub x <= b_ub, a_eq x = b_eq, bounds per variable.

    bounds defaults to (0, None) per variable.  Raises LpError after the
    pivot budget or on numerical failure; infeasible/unbounded problems
    come back as statuses, not exceptions.
    """
    c = np.asarray(c, dtype=float)
    result = linprog(
        -c,
        A_ub=a_ub,
        b_ub=b_ub,
        A_eq=a_eq,
        b_eq=b_eq,
        bounds=bounds if bounds is not None else (0, None),
        method="highs-ds",
        options={
            "maxiter": max_pivots,
            "primal_feasibility_tolerance": FEASIBILITY_TOL,
            "dual_feasibility_tolerance": FEASIBILITY_TOL,
        },
    )
    if result.status == 0:
        return LpSolution(LpStatus.OPTIMAL, np.asarray(result.x), float(-result.fun))
    if result.status == 2:
        return LpSolution(LpStatus.INFEASIBLE, None, None)
    if result.status == 3:
        return LpSolution(LpStatus.UNBOUNDED, None, None)
    if result.status == 1:
        raise LpError(f"pivot budget exhausted after {max_pivots} iterations")
    raise LpError(f"numerical failure in LP solve: {result.message}")
