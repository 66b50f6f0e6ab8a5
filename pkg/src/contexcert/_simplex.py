"""Phase-1 simplex for equality-constrained feasibility problems.

Solves  find x >= 0 with A x = b  by minimizing the sum of artificial
variables.  Two implementations share the same pivoting logic:

* a dense numpy tableau with Dantzig pricing that falls back to Bland's
  anti-cycling rule after a run of degenerate pivots (fast path), and
* an exact ``fractions.Fraction`` tableau using Bland's rule throughout
  (used where tolerance ambiguity must be ruled out).

Both return the phase-1 objective (0 iff the system is feasible, up to the
caller's tolerance), the structural solution when one exists, and the dual
vector ``y`` at optimality.  For an infeasible system ``y`` is a Farkas
certificate: y.A <= 0 componentwise while y.b equals the positive objective.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .errors import ContexcertError

PIVOT_TOL = 1e-11


class SimplexFailure(ContexcertError):
    """Iteration limit or numerical breakdown inside the solver."""


def phase1_dense(A: np.ndarray, b: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Run phase-1 on dense float64 data; returns (objective, x, y)."""
    A = np.ascontiguousarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64).copy()
    m, n = A.shape
    if b.shape != (m,):
        raise ContexcertError("b length does not match A rows")

    flip = b < 0
    if flip.any():
        A = A.copy()
        A[flip] *= -1.0
        b[flip] *= -1.0

    # Tableau layout: [A | I | b] with the reduced-cost row appended.
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n : n + m] = np.eye(m)
    T[:m, -1] = b
    T[m, :n] = -A.sum(axis=0)
    T[m, -1] = -b.sum()
    basis = np.arange(n, n + m)

    bland = False
    degenerate_streak = 0
    max_iter = 200 * (m + n + 10)
    for _ in range(max_iter):
        reduced = T[m, :n]
        if bland:
            candidates = np.flatnonzero(reduced < -PIVOT_TOL)
            if candidates.size == 0:
                break
            enter = int(candidates[0])
        else:
            enter = int(np.argmin(reduced))
            if reduced[enter] >= -PIVOT_TOL:
                break

        col = T[:m, enter]
        rows = np.flatnonzero(col > PIVOT_TOL)
        if rows.size == 0:
            # Phase-1 objective is bounded below by 0, so an unbounded ray
            # can only be numerical noise in the reduced costs.
            T[m, enter] = 0.0
            continue
        ratios = T[rows, -1] / col[rows]
        if bland:
            best = ratios.min()
            ties = rows[np.flatnonzero(ratios <= best + PIVOT_TOL)]
            leave = int(ties[np.argmin(basis[ties])])
        else:
            leave = int(rows[np.argmin(ratios)])

        if T[leave, -1] <= PIVOT_TOL:
            degenerate_streak += 1
            if degenerate_streak > 3 * (m + 5):
                bland = True
        else:
            degenerate_streak = 0

        piv = T[leave, enter]
        T[leave] /= piv
        column = T[:, enter].copy()
        column[leave] = 0.0
        T -= np.outer(column, T[leave])
        T[:, enter] = 0.0
        T[leave, enter] = 1.0
        basis[leave] = enter
    else:
        raise SimplexFailure("phase-1 simplex iteration limit exceeded")

    objective = -T[m, -1]
    x = np.zeros(n + m)
    x[basis] = T[:m, -1]
    x = x[:n]
    np.clip(x, 0.0, None, out=x)

    y = 1.0 - T[m, n : n + m]
    if flip.any():
        y = y.copy()
        y[flip] *= -1.0
    return float(objective), x, y


def phase1_exact(
    A: list[list[Fraction]], b: list[Fraction]
) -> tuple[Fraction, list[Fraction], list[Fraction]]:
    """Exact-rational phase-1 with Bland's rule; returns (objective, x, y)."""
    m = len(A)
    n = len(A[0]) if m else 0
    if len(b) != m:
        raise ContexcertError("b length does not match A rows")

    zero, one = Fraction(0), Fraction(1)
    flip = [bi < 0 for bi in b]
    rows = [
        [(-v if f else v) for v in row] + [one if i == j else zero for j in range(m)]
        for i, (row, f) in enumerate(zip(A, flip))
    ]
    rhs = [(-bi if fi else bi) for bi, fi in zip(b, flip)]
    cost = [-sum(rows[i][j] for i in range(m)) for j in range(n)] + [zero] * m
    cost_rhs = -sum(rhs)
    basis = list(range(n, n + m))

    max_iter = 500 * (m + n + 10)
    for _ in range(max_iter):
        enter = next((j for j in range(n) if cost[j] < 0), None)
        if enter is None:
            break
        candidates = [(rhs[i] / rows[i][enter], basis[i], i) for i in range(m) if rows[i][enter] > 0]
        if not candidates:
            raise SimplexFailure("unbounded phase-1 column in exact mode")
        _, _, leave = min(candidates)

        piv = rows[leave][enter]
        rows[leave] = [v / piv for v in rows[leave]]
        rhs[leave] /= piv
        for i in range(m):
            if i != leave and rows[i][enter] != 0:
                factor = rows[i][enter]
                rows[i] = [v - factor * w for v, w in zip(rows[i], rows[leave])]
                rhs[i] -= factor * rhs[leave]
        if cost[enter] != 0:
            factor = cost[enter]
            cost = [v - factor * w for v, w in zip(cost, rows[leave])]
            cost_rhs -= factor * rhs[leave]
        basis[leave] = enter
    else:
        raise SimplexFailure("exact phase-1 iteration limit exceeded")

    objective = -cost_rhs
    x = [zero] * (n + m)
    for i, bi in enumerate(basis):
        x[bi] = rhs[i]
    y = [one - cost[n + i] for i in range(m)]
    y = [(-v if f else v) for v, f in zip(y, flip)]
    return objective, x[:n], y
