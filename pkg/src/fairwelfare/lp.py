"""Dense two-phase tableau simplex for the toolkit's tiny linear programs.

Problems here have at most a few hundred variables and rows, so a plain
dense tableau with Bland's anti-cycling rule is simple, deterministic,
and fast enough. Degenerate rows are common (equality chains between
group-conditional probabilities are linearly dependent), hence Bland's
rule rather than Dantzig pricing, and explicit dropping of redundant
rows after phase one.

Solves: maximize c @ x  subject to  A_eq @ x = b_eq, A_ub @ x <= b_ub, x >= 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

PIVOT_TOL = 1e-10
FEASIBILITY_TOL = 1e-7
DEFAULT_MAX_PIVOTS = 50_000


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded" | "pivot_limit"
    x: Optional[np.ndarray]
    objective: Optional[float]
    pivots: int


def _pivot(T: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    factors = T[:, col].copy()
    factors[row] = 0.0
    T -= np.outer(factors, T[row])
    basis[row] = col


def _bland_iterate(
    T: np.ndarray, basis: np.ndarray, n_cols: int, max_pivots: int, pivots_used: int
) -> tuple[str, int]:
    """Run simplex pivots (maximization tableau) until optimal or stuck.

    The last tableau row holds reduced profits; optimality when none
    exceeds PIVOT_TOL. Entering: smallest eligible column index; leaving:
    minimum ratio, ties broken by smallest basis variable (Bland).
    """
    m = T.shape[0] - 1
    pivots = pivots_used
    while True:
        reduced = T[m, :n_cols]
        candidates = np.nonzero(reduced > PIVOT_TOL)[0]
        if candidates.size == 0:
            return "optimal", pivots
        col = int(candidates[0])
        column = T[:m, col]
        rows = np.nonzero(column > PIVOT_TOL)[0]
        if rows.size == 0:
            return "unbounded", pivots
        ratios = T[rows, -1] / column[rows]
        best = ratios.min()
        tied = rows[ratios <= best + PIVOT_TOL * (1.0 + abs(best))]
        row = int(tied[np.argmin(basis[tied])])
        if pivots >= max_pivots:
            return "pivot_limit", pivots
        _pivot(T, basis, row, col)
        pivots += 1


def solve_lp(
    c: np.ndarray,
    A_eq: Optional[np.ndarray] = None,
    b_eq: Optional[np.ndarray] = None,
    A_ub: Optional[np.ndarray] = None,
    b_ub: Optional[np.ndarray] = None,
    maximize: bool = True,
    max_pivots: int = DEFAULT_MAX_PIVOTS,
) -> LPResult:
    c = np.asarray(c, dtype=np.float64)
    n = c.size
    if not maximize:
        c = -c

    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=np.float64)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=np.float64)
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=np.float64)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=np.float64)

    n_slack = A_ub.shape[0]
    m = A_eq.shape[0] + n_slack
    n_struct = n + n_slack

    # Rows: equalities first, then inequalities with +1 slacks.
    A = np.zeros((m, n_struct))
    b = np.zeros(m)
    A[: A_eq.shape[0], :n] = A_eq
    b[: A_eq.shape[0]] = b_eq
    A[A_eq.shape[0] :, :n] = A_ub
    A[A_eq.shape[0] :, n:] = np.eye(n_slack)
    b[A_eq.shape[0] :] = b_ub

    # Normalize to b >= 0 (flips slack signs where b_ub < 0).
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0

    # Initial basis: usable slacks where possible, artificials elsewhere.
    basis = np.full(m, -1, dtype=np.int64)
    needs_artificial = []
    for i in range(m):
        si = i - A_eq.shape[0]
        if si >= 0 and A[i, n + si] == 1.0:
            basis[i] = n + si
        else:
            needs_artificial.append(i)

    pivots = 0
    n_art = len(needs_artificial)
    T = np.zeros((m + 1, n_struct + n_art + 1))
    T[:m, :n_struct] = A
    T[:m, -1] = b
    for k, i in enumerate(needs_artificial):
        T[i, n_struct + k] = 1.0
        basis[i] = n_struct + k

    if n_art:
        # Phase 1: maximize minus the sum of artificials.
        T[m, n_struct : n_struct + n_art] = -1.0
        for i in range(m):
            if basis[i] >= n_struct:
                T[m] += T[i]
        status, pivots = _bland_iterate(T, basis, n_struct + n_art, max_pivots, pivots)
        if status != "optimal":
            return LPResult(status, None, None, pivots)
        # The rhs cell of the objective row tracks minus the phase-1 value.
        if T[m, -1] > FEASIBILITY_TOL:
            return LPResult("infeasible", None, None, pivots)
        # Drive zero-level artificials out of the basis; rows without
        # structural support are redundant and dropped.
        drop_rows = []
        for i in range(m):
            if basis[i] >= n_struct:
                support = np.nonzero(np.abs(T[i, :n_struct]) > PIVOT_TOL)[0]
                if support.size:
                    _pivot(T, basis, i, int(support[0]))
                    pivots += 1
                else:
                    drop_rows.append(i)
        if drop_rows:
            keep = [i for i in range(m) if i not in drop_rows]
            T = T[keep + [m]]
            basis = basis[keep]
            m = len(keep)
        # Artificial columns are gone for good.
        T = np.hstack([T[:, :n_struct], T[:, -1:]])

    # Phase 2 objective row over structural columns.
    T[m, :] = 0.0
    T[m, :n] = c
    for i in range(m):
        bi = basis[i]
        if bi < n and c[bi] != 0.0:
            T[m] -= c[bi] * T[i]

    status, pivots = _bland_iterate(T, basis, n_struct, max_pivots, pivots)
    if status != "optimal":
        return LPResult(status, None, None, pivots)

    x = np.zeros(n_struct)
    x[basis] = T[:m, -1]
    objective = float(c @ x[:n])
    return LPResult("optimal", x[:n].copy(), objective if maximize else -objective, pivots)
