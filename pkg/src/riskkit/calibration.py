"""LOK score calibration.

Takes reference scores per characterization plus a consistent set of
pairwise constraints (strictly-greater with margin t, or equal) and shifts
the scores as little as possible, in total absolute deviation, so every
constraint holds inside [0, 1].

The solve is exact: rational simplex for the optimum, then a least-squares
pass over the optimal face so ties resolve to one reproducible answer
(e.g. {a: 0.5, b: 0.5} with a above b and t=0.1 comes back {0.55, 0.45},
not an arbitrary vertex like {0.6, 0.5}).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

import numpy as np

from .lp import QpFailure, solve_lp, solve_min_norm_qp

DEFAULT_T = 0.05

__all__ = [
    "DEFAULT_T",
    "CalibrationProblem",
    "LokScale",
    "StandardFormLp",
    "MalformedProblem",
    "InfeasibleComparisonChain",
    "to_standard_form",
    "solve_standard_form",
    "calibrate",
    "longest_strict_chain",
    "grid_best_objective",
]


class MalformedProblem(ValueError):
    """Constraint set is internally inconsistent (cycle, strict-within-equal)."""


def _exact_t(t: float) -> Fraction:
    # Thresholds are human-entered decimals: read 0.05 as 1/20, not as the
    # nearest binary float, so a chain of exactly 1/t steps stays feasible.
    return Fraction(str(t))


class InfeasibleComparisonChain(ValueError):
    """A strict chain is too long to fit in [0, 1] at the given threshold."""

    def __init__(self, chain: list[str], t: float):
        self.chain = list(chain)
        self.t = t
        span = (len(chain) - 1) * t
        super().__init__(
            "comparison chain %s needs a score span of %d*%g = %g, which does "
            "not fit in [0, 1]" % (" > ".join(chain), len(chain) - 1, t, span)
        )


@dataclass(frozen=True)
class CalibrationProblem:
    ids: tuple[str, ...]
    reference: dict[str, float]
    gt: frozenset[tuple[str, str]]  # (greater, lesser)
    eq: frozenset[frozenset[str]]
    t: float = DEFAULT_T

    def __post_init__(self):
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "reference", dict(self.reference))
        object.__setattr__(
            self, "gt", frozenset((a, b) for a, b in self.gt)
        )
        object.__setattr__(
            self, "eq", frozenset(frozenset(p) for p in self.eq)
        )
        known = set(self.ids)
        if len(known) != len(self.ids):
            raise MalformedProblem("duplicate ids")
        if not (0 < self.t <= 1):
            raise MalformedProblem("threshold t must be in (0, 1]")
        for i in self.ids:
            if i not in self.reference:
                raise MalformedProblem("missing reference score for %r" % i)
            r = self.reference[i]
            if not (0.0 <= r <= 1.0):
                raise MalformedProblem("reference score for %r outside [0,1]" % i)
        for a, b in self.gt:
            if a == b:
                raise MalformedProblem("strict comparison of %r with itself" % a)
            if a not in known or b not in known:
                raise MalformedProblem("GT pair (%r, %r) mentions unknown id" % (a, b))
        for pair in self.eq:
            if len(pair) != 2:
                raise MalformedProblem("EQ entries must be unordered pairs")
            if not pair <= known:
                raise MalformedProblem("EQ pair %r mentions unknown id" % (set(pair),))


@dataclass(frozen=True)
class LokScale:
    kind: str  # "reference" | "expert" | "global"
    scores: dict[str, float]
    objective: float
    expert_id: Optional[str] = None
    t: float = DEFAULT_T
    scores_exact: dict[str, Fraction] = field(
        default_factory=dict, compare=False, repr=False
    )
    objective_exact: Fraction = field(
        default=Fraction(0), compare=False, repr=False
    )


def _equality_classes(
    ids: Iterable[str], eq: Iterable[frozenset[str]]
) -> dict[str, str]:
    """Map each id to its class representative (smallest member id)."""
    adj: dict[str, set[str]] = {i: set() for i in ids}
    for pair in eq:
        a, b = sorted(pair)
        adj[a].add(b)
        adj[b].add(a)
    rep: dict[str, str] = {}
    for start in sorted(adj):
        if start in rep:
            continue
        comp = [start]
        seen = {start}
        queue = [start]
        while queue:
            cur = queue.pop()
            for nxt in adj[cur]:
                if nxt not in seen:
                    seen.add(nxt)
                    comp.append(nxt)
                    queue.append(nxt)
        r = min(comp)
        for member in comp:
            rep[member] = r
    return rep


def _contract(
    p_ids: Iterable[str],
    gt: Iterable[tuple[str, str]],
    eq: Iterable[frozenset[str]],
) -> tuple[dict[str, str], set[tuple[str, str]]]:
    rep = _equality_classes(p_ids, eq)
    edges: set[tuple[str, str]] = set()
    for a, b in gt:
        ra, rb = rep[a], rep[b]
        if ra == rb:
            raise MalformedProblem(
                "strict comparison between %r and %r, but they are in the same "
                "equality class" % (a, b)
            )
        edges.add((ra, rb))
    return rep, edges


def longest_strict_chain(
    gt: Iterable[tuple[str, str]], eq: Iterable[frozenset[str]] = ()
) -> tuple[int, list[str]]:
    """Length (edge count) and witness path of the longest strict chain.

    Equal ids are contracted first; the witness names class representatives.
    Raises MalformedProblem on a cycle.
    """
    gt = set(gt)
    eq = set(eq)
    node_pool = {i for pair in gt for i in pair} | {i for pair in eq for i in pair}
    rep, edges = _contract(node_pool, gt, eq)
    children: dict[str, list[str]] = {r: [] for r in set(rep.values())}
    for a, b in sorted(edges):
        children[a].append(b)

    WHITE, GRAY, BLACK = 0, 1, 2
    color = {n: WHITE for n in children}
    best: dict[str, tuple[int, Optional[str]]] = {}

    def visit(node: str) -> int:
        if color[node] == BLACK:
            return best[node][0]
        if color[node] == GRAY:
            raise MalformedProblem("strict comparisons form a cycle through %r" % node)
        color[node] = GRAY
        length, succ = 0, None
        for child in children[node]:
            cand = visit(child) + 1
            if cand > length:
                length, succ = cand, child
        color[node] = BLACK
        best[node] = (length, succ)
        return length

    for node in sorted(children):
        visit(node)
    if not best:
        return 0, []
    start = min(sorted(best), key=lambda n: (-best[n][0], n))
    path = [start]
    while best[path[-1]][1] is not None:
        path.append(best[path[-1]][1])
    return best[start][0], path


@dataclass(frozen=True)
class StandardFormLp:
    """Explicit |L - L_R| -> (u, v) split over 3n variables.

    Variable order is L_1..L_n, u_1..u_n, v_1..v_n following problem id
    order. Rows are (coefficients, rhs) with the operator given by the
    group: link and equality rows are equations, gt and bound rows are >=.
    """

    variables: tuple[str, ...]
    costs: tuple[Fraction, ...]
    link_rows: tuple[tuple[tuple[Fraction, ...], Fraction], ...]
    eq_rows: tuple[tuple[tuple[Fraction, ...], Fraction], ...]
    gt_rows: tuple[tuple[tuple[Fraction, ...], Fraction], ...]
    bound_rows: tuple[tuple[tuple[Fraction, ...], Fraction], ...]


def to_standard_form(p: CalibrationProblem) -> StandardFormLp:
    n = len(p.ids)
    col = {i: k for k, i in enumerate(p.ids)}
    t = _exact_t(p.t)
    zero_row = lambda: [Fraction(0)] * (3 * n)

    variables = tuple(
        ["L_%s" % i for i in p.ids]
        + ["u_%s" % i for i in p.ids]
        + ["v_%s" % i for i in p.ids]
    )
    costs = tuple([Fraction(0)] * n + [Fraction(1)] * (2 * n))

    link = []
    for i in p.ids:
        row = zero_row()
        row[col[i]] = Fraction(1)
        row[n + col[i]] = Fraction(-1)
        row[2 * n + col[i]] = Fraction(1)
        link.append((tuple(row), Fraction(p.reference[i])))

    eq_rows = []
    for pair in sorted(p.eq, key=sorted):
        a, b = sorted(pair)
        row = zero_row()
        row[col[a]] = Fraction(1)
        row[col[b]] = Fraction(-1)
        eq_rows.append((tuple(row), Fraction(0)))

    gt_rows = []
    for a, b in sorted(p.gt):
        row = zero_row()
        row[col[a]] = Fraction(1)
        row[col[b]] = Fraction(-1)
        gt_rows.append((tuple(row), t))

    bounds = []
    for i in p.ids:
        lo = zero_row()
        lo[col[i]] = Fraction(1)
        bounds.append((tuple(lo), Fraction(0)))
        hi = zero_row()
        hi[col[i]] = Fraction(-1)
        bounds.append((tuple(hi), Fraction(-1)))

    return StandardFormLp(
        variables=variables,
        costs=costs,
        link_rows=tuple(link),
        eq_rows=tuple(eq_rows),
        gt_rows=tuple(gt_rows),
        bound_rows=tuple(bounds),
    )


def solve_standard_form(sf: StandardFormLp) -> tuple[dict[str, Fraction], Fraction]:
    """Solve the explicit standard form; returns (L values by name, objective)."""
    n3 = len(sf.variables)
    n = n3 // 3
    ge_rows = list(sf.gt_rows) + list(sf.bound_rows)
    width = n3 + len(ge_rows)  # one surplus per >= row
    rows, rhs = [], []
    for coeffs, b in list(sf.link_rows) + list(sf.eq_rows):
        rows.append(list(coeffs) + [Fraction(0)] * len(ge_rows))
        rhs.append(b)
    for k, (coeffs, b) in enumerate(ge_rows):
        row = list(coeffs) + [Fraction(0)] * len(ge_rows)
        row[n3 + k] = Fraction(-1)
        rows.append(row)
        rhs.append(b)
    costs = list(sf.costs) + [Fraction(0)] * len(ge_rows)
    # simplex wants x >= 0; L already lives in [0, 1] so no free-variable split
    sol = solve_lp(costs, rows, rhs)
    if sol.status != "optimal":
        raise MalformedProblem("standard form unsolvable: %s" % sol.status)
    values = {sf.variables[k]: sol.x[k] for k in range(n)}
    return values, sol.objective


def _stage1_merged(
    classes: list[str],
    members: dict[str, list[str]],
    refs: dict[str, Fraction],
    class_edges: list[tuple[str, str]],
    t: Fraction,
):
    """Equality-merged LP in simplex standard form. Returns exact solution parts."""
    member_list = [i for c in classes for i in members[c]]
    m, n, g = len(classes), len(member_list), len(class_edges)
    y0 = 0
    u0 = m
    v0 = m + n
    s0 = m + 2 * n
    w0 = m + 2 * n + m
    width = 2 * m + 2 * n + g
    ycol = {c: y0 + k for k, c in enumerate(classes)}
    mcol = {i: k for k, i in enumerate(member_list)}

    rows, rhs = [], []
    for i in member_list:
        row = [Fraction(0)] * width
        row[ycol[_class_of(i, classes, members)]] = Fraction(1)
        row[u0 + mcol[i]] = Fraction(-1)
        row[v0 + mcol[i]] = Fraction(1)
        rows.append(row)
        rhs.append(refs[i])
    for k, c in enumerate(classes):
        row = [Fraction(0)] * width
        row[ycol[c]] = Fraction(1)
        row[s0 + k] = Fraction(1)
        rows.append(row)
        rhs.append(Fraction(1))
    for k, (hi, lo) in enumerate(class_edges):
        row = [Fraction(0)] * width
        row[ycol[hi]] = Fraction(1)
        row[ycol[lo]] = Fraction(-1)
        row[w0 + k] = Fraction(-1)
        rows.append(row)
        rhs.append(t)

    costs = [Fraction(0)] * width
    for k in range(2 * n):
        costs[u0 + k] = Fraction(1)

    sol = solve_lp(costs, rows, rhs)
    if sol.status != "optimal":
        raise MalformedProblem("calibration LP came back %s" % sol.status)
    u = [sol.x[u0 + k] for k in range(n)]
    v = [sol.x[v0 + k] for k in range(n)]
    return member_list, u, v, sol.objective


def _class_of(member: str, classes: list[str], members: dict[str, list[str]]) -> str:
    # small sizes; linear scan keeps the call sites simple
    for c in classes:
        if member in members[c]:
            return c
    raise KeyError(member)


def calibrate(
    p: CalibrationProblem, *, kind: str = "reference", expert_id: Optional[str] = None
) -> LokScale:
    if not p.ids:
        return LokScale(kind=kind, scores={}, objective=0.0, expert_id=expert_id, t=p.t)

    refs = {i: Fraction(p.reference[i]) for i in p.ids}
    t = _exact_t(p.t)

    if not p.gt and not p.eq:
        return LokScale(
            kind=kind,
            scores={i: float(refs[i]) for i in p.ids},
            objective=0.0,
            expert_id=expert_id,
            t=p.t,
            scores_exact=dict(refs),
            objective_exact=Fraction(0),
        )

    rep, class_edges_set = _contract(p.ids, p.gt, p.eq)
    length, chain = longest_strict_chain(p.gt, p.eq)
    if length * t > 1:
        raise InfeasibleComparisonChain(chain, p.t)

    classes = sorted(set(rep.values()))
    members = {c: sorted(i for i in p.ids if rep[i] == c) for c in classes}
    class_edges = sorted(class_edges_set)

    member_list, u, v, objective = _stage1_merged(classes, members, refs, class_edges, t)
    n = len(member_list)
    mcol = {i: k for k, i in enumerate(member_list)}

    # Tie-break: among LP optima, take the least-squares point of the optimal
    # face. With the primary objective pinned, sum(u^2 + v^2) equals
    # sum((L_i - L_Ri)^2) on that face and is strictly convex, so the
    # minimizer is unique.
    dim = 2 * n

    def uv_row(i: str, sign: int) -> list[Fraction]:
        row = [Fraction(0)] * dim
        row[mcol[i]] = Fraction(sign)
        row[n + mcol[i]] = Fraction(-sign)
        return row

    E: list[list[Fraction]] = []
    e_rhs: list[Fraction] = []
    for c in classes:
        anchor = members[c][0]
        for other in members[c][1:]:
            row = uv_row(other, 1)
            arow = uv_row(anchor, 1)
            row = [a - b for a, b in zip(row, arow)]
            E.append(row)
            e_rhs.append(refs[anchor] - refs[other])
    E.append([Fraction(1)] * dim)
    e_rhs.append(objective)

    G: list[list[Fraction]] = []
    h_rhs: list[Fraction] = []
    for hi, lo in class_edges:
        ra, rb = members[hi][0], members[lo][0]
        row = [a - b for a, b in zip(uv_row(ra, 1), uv_row(rb, 1))]
        G.append(row)
        h_rhs.append(t - refs[ra] + refs[rb])
    for c in classes:
        a = members[c][0]
        G.append(uv_row(a, 1))
        h_rhs.append(-refs[a])
        G.append(uv_row(a, -1))
        h_rhs.append(refs[a] - Fraction(1))
    for k in range(dim):
        row = [Fraction(0)] * dim
        row[k] = Fraction(1)
        G.append(row)
        h_rhs.append(Fraction(0))

    z0 = list(u) + list(v)
    try:
        z = solve_min_norm_qp(E, e_rhs, G, h_rhs, z0)
    except QpFailure:
        z = z0  # LP vertex is already optimal and deterministic; keep it

    scores_exact: dict[str, Fraction] = {}
    for c in classes:
        a = members[c][0]
        val = refs[a] + z[mcol[a]] - z[n + mcol[a]]
        for i in members[c]:
            scores_exact[i] = val

    for hi, lo in class_edges:
        assert scores_exact[members[hi][0]] - scores_exact[members[lo][0]] >= t
    assert all(0 <= s <= 1 for s in scores_exact.values())

    return LokScale(
        kind=kind,
        scores={i: float(scores_exact[i]) for i in p.ids},
        objective=float(objective),
        expert_id=expert_id,
        t=p.t,
        scores_exact=scores_exact,
        objective_exact=objective,
    )


def grid_best_objective(p: CalibrationProblem, step: float = 0.001) -> Optional[float]:
    """Exhaustive grid check: best objective over feasible grid points.

    Independent of the LP path: enumerates two equality classes on a full
    2-D grid and eliminates the remaining classes in closed form using
    convexity of the per-class deviation curves. Exact for up to four
    classes; None when no grid point is feasible.
    """
    step_exact = Fraction(str(step))
    N = round(1.0 / step) + 1
    if (N - 1) * step_exact != 1:
        raise ValueError("step must divide 1 evenly")
    gap = _exact_t(p.t) / step_exact  # min index gap for a strict edge
    D = -(-gap.numerator // gap.denominator)

    rep, edge_set = _contract(p.ids, p.gt, p.eq)
    classes = sorted(set(rep.values()))
    k = len(classes)
    if k > 4:
        raise ValueError("grid check supports at most 4 equality classes")
    if k == 0:
        return 0.0
    cidx = {c: j for j, c in enumerate(classes)}
    edges = sorted((cidx[a], cidx[b]) for a, b in edge_set)  # a's value >= b's + t

    grid = np.linspace(0.0, 1.0, N)
    f = []
    for c in classes:
        refs = np.array([p.reference[i] for i in p.ids if rep[i] == c])
        f.append(np.abs(grid[:, None] - refs[None, :]).sum(axis=1))
    argmin = [int(np.argmin(fc)) for fc in f]

    if k == 1:
        return float(f[0].min())

    I = np.arange(N)[:, None]
    J = np.arange(N)[None, :]
    total = f[0][:, None] + f[1][None, :]
    feasible = np.ones((N, N), dtype=bool)
    for a, b in edges:
        if a == 0 and b == 1:
            feasible &= I - J >= D
        elif a == 1 and b == 0:
            feasible &= J - I >= D

    def elim_bounds(ci: int):
        lo = np.zeros((N, N), dtype=int)
        hi = np.full((N, N), N - 1, dtype=int)
        for a, b in edges:
            if a == ci and b == 0:
                lo = np.maximum(lo, I + D)
            elif a == ci and b == 1:
                lo = np.maximum(lo, J + D)
            elif b == ci and a == 0:
                hi = np.minimum(hi, I - D)
            elif b == ci and a == 1:
                hi = np.minimum(hi, J - D)
        return lo, hi

    def range_min(ci: int, lo, hi):
        idx = np.clip(argmin[ci], lo, hi)
        vals = f[ci][np.clip(idx, 0, N - 1)]
        return np.where(lo <= hi, vals, np.inf)

    if k >= 3:
        lo2, hi2 = elim_bounds(2)
    if k == 3:
        total = total + range_min(2, lo2, hi2)
    if k == 4:
        lo3, hi3 = elim_bounds(3)
        coupled = [(a, b) for a, b in edges if {a, b} == {2, 3}]
        if not coupled:
            total = total + range_min(2, lo2, hi2) + range_min(3, lo3, hi3)
        else:
            a, b = coupled[0]
            # orient so the "upper" class is cu: value(cu) >= value(cl) + t
            cu, cl = (2, 3) if a == 2 else (3, 2)
            flo = [None, None, lo2, lo3]
            fhi = [None, None, hi2, hi3]
            iu = np.clip(argmin[cu], flo[cu], fhi[cu])
            il = np.clip(argmin[cl], flo[cl], fhi[cl])
            indep = f[cu][np.clip(iu, 0, N - 1)] + f[cl][np.clip(il, 0, N - 1)]
            indep_ok = (flo[cu] <= fhi[cu]) & (flo[cl] <= fhi[cl]) & (iu - il >= D)
            # constraint binds: value(cu) = value(cl) + t, one curve to minimize
            hline = f[cu][D:] + f[cl][: N - D]
            hmin = int(np.argmin(hline))
            zlo = np.maximum(flo[cl], flo[cu] - D)
            zhi = np.minimum(fhi[cl], fhi[cu] - D)
            zidx = np.clip(hmin, zlo, zhi)
            bind = hline[np.clip(zidx, 0, N - 1 - D)]
            bind = np.where(zlo <= zhi, bind, np.inf)
            total = total + np.where(indep_ok, indep, bind)

    total = np.where(feasible, total, np.inf)
    best = float(total.min())
    return None if math.isinf(best) else best
