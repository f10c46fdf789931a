"""Small exact linear/quadratic solvers on rational arithmetic.

The calibration problems this package solves are tiny (tens of variables),
so the solvers here favor exactness and determinism over speed: everything
runs on ``fractions.Fraction``, two-phase simplex uses Bland's rule (no
cycling, no tie ambiguity), and the quadratic tie-break solver is a plain
primal active-set method on the same rationals.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

Row = list[Fraction]

__all__ = ["LpSolution", "solve_lp", "solve_min_norm_qp", "QpFailure"]


@dataclass
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: list[Fraction]
    objective: Optional[Fraction]


def _as_fractions(values: Sequence) -> Row:
    return [v if isinstance(v, Fraction) else Fraction(v) for v in values]


def solve_lp(c: Sequence, A: Sequence[Sequence], b: Sequence) -> LpSolution:
    """Minimize c.x subject to A x = b, x >= 0. Exact two-phase simplex."""
    cost = _as_fractions(c)
    n = len(cost)
    rows = [_as_fractions(r) for r in A]
    rhs = _as_fractions(b)
    m = len(rows)
    for r in rows:
        if len(r) != n:
            raise ValueError("ragged constraint matrix")
    if len(rhs) != m:
        raise ValueError("rhs length mismatch")

    # normalize rhs >= 0 so the artificial basis is feasible
    for i in range(m):
        if rhs[i] < 0:
            rows[i] = [-v for v in rows[i]]
            rhs[i] = -rhs[i]

    # tableau over columns [x_0..x_{n-1}, a_0..a_{m-1} | rhs]
    width = n + m
    T = [rows[i] + [Fraction(0)] * m + [rhs[i]] for i in range(m)]
    for i in range(m):
        T[i][n + i] = Fraction(1)
    basis = list(range(n, n + m))

    # phase 1: minimize sum of artificials
    z = [Fraction(0)] * (width + 1)
    for i in range(m):
        for j in range(width + 1):
            z[j] += T[i][j]
    # reduced costs: cost(x)=0, cost(artificial)=1 -> c_bar = c - z
    phase1 = [Fraction(0) - z[j] for j in range(width)]
    for j in range(m):
        phase1[n + j] += Fraction(1)
    obj1 = [z[width]]  # current phase-1 objective value (positive)

    def pivot(row: int, col: int, cbar: Row, objcell: list) -> None:
        piv = T[row][col]
        T[row] = [v / piv for v in T[row]]
        for i in range(m):
            if i != row and T[i][col] != 0:
                f = T[i][col]
                T[i] = [a - f * b_ for a, b_ in zip(T[i], T[row])]
        if cbar[col] != 0:
            f = cbar[col]
            for j in range(width):
                cbar[j] -= f * T[row][j]
            objcell[0] += f * T[row][width]
        basis[row] = col

    def run_simplex(cbar: Row, objcell: list, allowed: int) -> str:
        # Bland: entering = lowest-index negative reduced cost;
        # leaving = min ratio, ties by lowest basic variable index.
        while True:
            col = -1
            for j in range(allowed):
                if cbar[j] < 0:
                    col = j
                    break
            if col < 0:
                return "optimal"
            row = -1
            best: Optional[Fraction] = None
            for i in range(m):
                if T[i][col] > 0:
                    ratio = T[i][width] / T[i][col]
                    if best is None or ratio < best or (
                        ratio == best and basis[i] < basis[row]
                    ):
                        best = ratio
                        row = i
            if row < 0:
                return "unbounded"
            pivot(row, col, cbar, objcell)

    status = run_simplex(phase1, obj1, width)
    if status != "optimal" or obj1[0] != 0:
        return LpSolution("infeasible", [], None)

    # drive leftover artificials out of the basis (degenerate rows)
    for i in range(m):
        if basis[i] >= n:
            piv_col = next((j for j in range(n) if T[i][j] != 0), None)
            if piv_col is not None:
                pivot(i, piv_col, phase1, obj1)
            # an all-zero row is a redundant constraint; harmless to keep

    # phase 2 reduced costs for the real objective
    cbar = list(cost) + [Fraction(0)] * m
    objcell = [Fraction(0)]
    for i in range(m):
        bj = basis[i]
        if bj < width and cbar[bj] != 0:
            f = cbar[bj]
            for j in range(width):
                cbar[j] -= f * T[i][j]
            objcell[0] += f * T[i][width]
    # forbid artificials from re-entering by restricting entering columns to x
    status = run_simplex(cbar, objcell, n)
    if status == "unbounded":
        return LpSolution("unbounded", [], None)

    x = [Fraction(0)] * n
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = T[i][width]
    value = sum((ci * xi for ci, xi in zip(cost, x)), Fraction(0))
    return LpSolution("optimal", x, value)


class QpFailure(Exception):
    """Active-set iteration limit hit; caller should fall back to its LP point."""


def _solve_linear(M: list[Row], rhs: Row) -> Optional[Row]:
    """Gaussian elimination on fractions; None if singular/inconsistent."""
    m = len(M)
    n = len(M[0]) if m else 0
    A = [list(row) + [rhs[i]] for i, row in enumerate(M)]
    piv_cols: list[int] = []
    r = 0
    for col in range(n):
        sel = next((i for i in range(r, m) if A[i][col] != 0), None)
        if sel is None:
            continue
        A[r], A[sel] = A[sel], A[r]
        inv = A[r][col]
        A[r] = [v / inv for v in A[r]]
        for i in range(m):
            if i != r and A[i][col] != 0:
                f = A[i][col]
                A[i] = [a - f * b for a, b in zip(A[i], A[r])]
        piv_cols.append(col)
        r += 1
        if r == m:
            break
    for i in range(r, m):
        if A[i][n] != 0:
            return None  # inconsistent
    x = [Fraction(0)] * n
    for i, col in enumerate(piv_cols):
        x[col] = A[i][n]
    return x


class _RankTracker:
    """Incremental row-echelon form for deciding linear independence."""

    def __init__(self):
        self.rows: list[Row] = []
        self.pivots: list[int] = []

    def add(self, row: Row) -> bool:
        """Reduce row against the basis; keep it (and return True) if new."""
        r = list(row)
        for vec, piv in zip(self.rows, self.pivots):
            if r[piv] != 0:
                f = r[piv] / vec[piv]
                r = [a - f * b for a, b in zip(r, vec)]
        piv = next((j for j, v in enumerate(r) if v != 0), None)
        if piv is None:
            return False
        self.rows.append(r)
        self.pivots.append(piv)
        return True


def solve_min_norm_qp(
    E: list[Row],
    e: Row,
    G: list[Row],
    h: Row,
    z0: Row,
    max_iter: int = 500,
) -> Row:
    """Minimize ||z||^2 subject to E z = e and G z >= h, from feasible z0.

    Primal active-set method, exact arithmetic. The objective is strictly
    convex so the minimizer is unique; index-order tie rules make the
    iteration deterministic. Raises QpFailure if the iteration cap trips
    (degenerate cycling), which callers treat as "keep the LP point".
    """
    dim = len(z0)
    E = [_as_fractions(r) for r in E]
    e = _as_fractions(e)
    G = [_as_fractions(r) for r in G]
    h = _as_fractions(h)
    z = _as_fractions(z0)

    def dot(a: Row, b: Row) -> Fraction:
        return sum((x * y for x, y in zip(a, b)), Fraction(0))

    # keep the working set linearly independent: the KKT matrix is then
    # nonsingular and the multipliers (hence the drop test) are unique
    tracker = _RankTracker()
    keep_eq = [i for i in range(len(E)) if tracker.add(E[i])]
    E = [E[i] for i in keep_eq]
    e = [e[i] for i in keep_eq]
    active = []
    for i in range(len(G)):
        if dot(G[i], z) == h[i] and tracker.add(G[i]):
            active.append(i)

    def solve_eqp(act: list[int]) -> Optional[tuple[Row, Row]]:
        # stationarity 2w - E^T mu - G_act^T lam = 0 with primal feasibility;
        # lam >= 0 is then the optimality test for the inequality rows
        cons = E + [G[i] for i in act]
        rhs_c = e + [h[i] for i in act]
        k = len(cons)
        size = dim + k
        M = [[Fraction(0)] * size for _ in range(size)]
        rhs = [Fraction(0)] * size
        for i in range(dim):
            M[i][i] = Fraction(2)
            for j in range(k):
                M[i][dim + j] = -cons[j][i]
        for j in range(k):
            for i in range(dim):
                M[dim + j][i] = cons[j][i]
            rhs[dim + j] = rhs_c[j]
        sol = _solve_linear(M, rhs)
        if sol is None:
            return None
        return sol[:dim], sol[dim + len(E):]

    for _ in range(max_iter):
        solved = solve_eqp(active)
        if solved is None:
            raise QpFailure("singular KKT system despite independent working set")
        w, lam = solved

        if w == z:
            neg = [(lam[j], active[j]) for j in range(len(active)) if lam[j] < 0]
            if not neg:
                return z
            # drop the most negative multiplier; ties by smallest index
            neg.sort(key=lambda p: (p[0], p[1]))
            active.remove(neg[0][1])
            continue

        d = [wi - zi for wi, zi in zip(w, z)]
        alpha = Fraction(1)
        blocker = -1
        for i in range(len(G)):
            if i in active:
                continue
            gd = dot(G[i], d)
            if gd < 0:
                limit = (h[i] - dot(G[i], z)) / gd
                if limit < alpha:
                    alpha = limit
                    blocker = i
        z = [zi + alpha * di for zi, di in zip(z, d)]
        if blocker >= 0:
            # g.d != 0 while active rows have zero product with d, so the
            # blocking row is automatically independent of the working set
            active.append(blocker)
            active.sort()
    raise QpFailure("active-set iteration cap exceeded")
