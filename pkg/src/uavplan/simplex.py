"""Dense two-phase primal simplex, desk scale.

Solves  max c.x  subject to  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0.
Dantzig pricing with an automatic switch to Bland's rule when the objective
stalls, which guarantees termination on degenerate problems.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FEAS_TOL = 1e-9
PIVOT_TOL = 1e-9
SIZE_CAP = 2000
_BLAND_AFTER = 60  # stalled iterations before anti-cycling kicks in


@dataclass
class SimplexResult:
    status: str  # optimal | infeasible | unbounded
    x: np.ndarray | None
    value: float | None
    iterations: int = 0


class SizeCapError(ValueError):
    pass


def _pivot(T: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    factors = T[:, col].copy()
    factors[row] = 0.0
    T -= np.outer(factors, T[row])
    basis[row] = col


def _run(T: np.ndarray, basis: np.ndarray, cost: np.ndarray, allowed: np.ndarray):
    """Optimize max cost.x over the tableau in place; returns status string."""
    m = T.shape[0]
    it = 0
    stall = 0
    last = -np.inf
    bland = False
    max_iter = 20000 + 200 * (m + T.shape[1])
    while True:
        it += 1
        if it > max_iter:
            raise RuntimeError("simplex iteration cap exceeded")
        # reduced costs for a max problem: improving columns have r > 0
        r = cost - cost[basis] @ T[:, :-1]
        r[~allowed] = 0.0
        if bland:
            cands = np.nonzero(r > FEAS_TOL)[0]
            if cands.size == 0:
                return "optimal", it
            col = int(cands[0])
        else:
            col = int(np.argmax(r))
            if r[col] <= FEAS_TOL:
                return "optimal", it
        colvals = T[:, col]
        pos = colvals > PIVOT_TOL
        if not pos.any():
            return "unbounded", it
        ratios = np.where(pos, T[:, -1] / np.where(pos, colvals, 1.0), np.inf)
        best = ratios.min()
        ties = np.nonzero(ratios <= best + FEAS_TOL)[0]
        # leaving rule: lowest basis index among ties (Bland-compatible)
        row = int(ties[np.argmin(basis[ties])])
        _pivot(T, basis, row, col)
        obj = float(cost[basis] @ T[:, -1])
        if obj > last + 1e-12:
            last = obj
            stall = 0
        else:
            stall += 1
            if stall >= _BLAND_AFTER:
                bland = True


def simplex_solve(
    c,
    a_ub=None,
    b_ub=None,
    a_eq=None,
    b_eq=None,
    maximize: bool = True,
) -> SimplexResult:
    """Solve the LP; variables are nonnegative.  Returns status, the primal
    point on the structural variables, and the objective value."""
    c = np.asarray(c, dtype=float).ravel()
    n = c.size
    a_ub = np.zeros((0, n)) if a_ub is None else np.asarray(a_ub, dtype=float).reshape(-1, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    a_eq = np.zeros((0, n)) if a_eq is None else np.asarray(a_eq, dtype=float).reshape(-1, n)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    if not (np.all(np.isfinite(c)) and np.all(np.isfinite(a_ub)) and np.all(np.isfinite(a_eq))):
        raise ValueError("coefficients must be finite")
    m = a_ub.shape[0] + a_eq.shape[0]
    if n > SIZE_CAP or m > 4 * SIZE_CAP:
        raise SizeCapError(f"problem size {n} vars x {m} rows exceeds the desk-scale cap")
    if not maximize:
        res = simplex_solve(-c, a_ub, b_ub, a_eq, b_eq, maximize=True)
        if res.value is not None:
            res.value = -res.value
        return res

    # normalize rows to b >= 0; <= rows flipping sign become >= rows
    rows = []
    senses = []
    for A, b, sense in ((a_ub, b_ub, "<="), (a_eq, b_eq, "=")):
        for i in range(A.shape[0]):
            a, rhs = A[i], b[i]
            sn = sense
            if rhs < 0:
                a, rhs = -a, -rhs
                if sn == "<=":
                    sn = ">="
            rows.append((a, rhs))
            senses.append(sn)

    n_slack = sum(1 for sn in senses if sn in ("<=", ">="))
    n_art = sum(1 for sn in senses if sn in (">=", "="))
    N = n + n_slack + n_art
    T = np.zeros((m, N + 1))
    basis = np.full(m, -1, dtype=int)
    s_at = n
    a_at = n + n_slack
    art_cols = []
    for i, ((a, rhs), sn) in enumerate(zip(rows, senses)):
        T[i, :n] = a
        T[i, -1] = rhs
        if sn == "<=":
            T[i, s_at] = 1.0
            basis[i] = s_at
            s_at += 1
        elif sn == ">=":
            T[i, s_at] = -1.0
            s_at += 1
            T[i, a_at] = 1.0
            basis[i] = a_at
            art_cols.append(a_at)
            a_at += 1
        else:
            T[i, a_at] = 1.0
            basis[i] = a_at
            art_cols.append(a_at)
            a_at += 1

    iterations = 0
    if art_cols:
        cost1 = np.zeros(N)
        cost1[art_cols] = -1.0  # max of -(sum of artificials)
        allowed = np.ones(N, dtype=bool)
        status, it = _run(T, basis, cost1, allowed)
        iterations += it
        if status != "optimal" or float(cost1[basis] @ T[:, -1]) < -1e-7:
            return SimplexResult("infeasible", None, None, iterations)
        # drive leftover artificials out of the basis, dropping redundant rows
        art_set = set(art_cols)
        keep = np.ones(m, dtype=bool)
        for i in range(m):
            if basis[i] in art_set:
                piv = np.nonzero(np.abs(T[i, : n + n_slack]) > PIVOT_TOL)[0]
                if piv.size:
                    _pivot(T, basis, i, int(piv[0]))
                else:
                    keep[i] = False
        if not keep.all():
            T = T[keep]
            basis = basis[keep]
            m = T.shape[0]

    cost2 = np.zeros(N)
    cost2[:n] = c
    allowed = np.ones(N, dtype=bool)
    allowed[n + n_slack :] = False  # artificials never re-enter
    status, it = _run(T, basis, cost2, allowed)
    iterations += it
    if status == "unbounded":
        return SimplexResult("unbounded", None, None, iterations)
    x = np.zeros(N)
    x[basis] = T[:, -1]
    return SimplexResult("optimal", x[:n].copy(), float(c @ x[:n]), iterations)
