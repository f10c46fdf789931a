"""Multi-expert consensus over pairwise LOK comparisons.

Each expert's comparison closure is tallied into per-pair weights; the
consensus is the total weak ordering of the ids that minimizes the number
of disagreements with those tallies (equalities that both sides endorse
earn a discount, hence the -2 term). The search is exact branch-and-bound
over ordered set partitions, so transitivity holds by construction rather
than via side constraints.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from .comparisons import ComparisonGraph, eq, lt

__all__ = [
    "PairWeights",
    "ConsensusRelations",
    "SolveStats",
    "CancellationToken",
    "SolveCancelled",
    "SizeLimitExceeded",
    "aggregate_weights",
    "solve_consensus",
    "brute_force_consensus",
    "consensus_to_gt_eq",
    "iter_weak_orderings",
]

DEFAULT_EXACT_BOUND = 12


class SizeLimitExceeded(ValueError):
    """Too many ids for the exact solver's configured bound."""


class SolveCancelled(RuntimeError):
    """The cancellation token was triggered mid-search."""


class CancellationToken:
    """Cooperative cancellation; checked between search nodes."""

    __slots__ = ("_flag",)

    def __init__(self):
        self._flag = False

    def cancel(self) -> None:
        self._flag = True

    @property
    def cancelled(self) -> bool:
        return self._flag


@dataclass(frozen=True)
class PairWeights:
    """Expert tallies per unordered pair.

    counts maps (a, b) with a < b to (le_ab, le_ba, eq_ab): how many experts
    hold a <= b, b <= a, and a = b respectively. Pairs without a key count
    zero. Aggregation guarantees eq_ab <= min(le_ab, le_ba); hand-built
    weights may break that, which the solver tolerates.
    """

    ids: tuple[str, ...]
    counts: dict[tuple[str, str], tuple[int, int, int]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "ids", tuple(sorted(self.ids)))
        known = set(self.ids)
        if len(known) != len(self.ids):
            raise ValueError("duplicate ids")
        clean = {}
        for (a, b), triple in self.counts.items():
            if a >= b:
                raise ValueError("count keys must be ordered pairs (a, b) with a < b")
            if a not in known or b not in known:
                raise ValueError("count key (%r, %r) mentions unknown id" % (a, b))
            le_ab, le_ba, eq_ab = triple
            if min(le_ab, le_ba, eq_ab) < 0:
                raise ValueError("negative weight on pair (%r, %r)" % (a, b))
            clean[(a, b)] = (int(le_ab), int(le_ba), int(eq_ab))
        object.__setattr__(self, "counts", clean)

    def le(self, a: str, b: str) -> int:
        """Number of experts holding a <= b."""
        if a < b:
            return self.counts.get((a, b), (0, 0, 0))[0]
        return self.counts.get((b, a), (0, 0, 0))[1]

    def eq_weight(self, a: str, b: str) -> int:
        key = (a, b) if a < b else (b, a)
        return self.counts.get(key, (0, 0, 0))[2]


def aggregate_weights(graphs: Iterable[ComparisonGraph], ids: Iterable[str]) -> PairWeights:
    """Tally each expert's closure over every unordered pair of ids."""
    id_list = sorted(set(ids))
    graphs = list(graphs)
    counts: dict[tuple[str, str], list[int]] = {}
    for i, a in enumerate(id_list):
        for b in id_list[i + 1:]:
            tally = [0, 0, 0]
            for g in graphs:
                if a not in g.nodes or b not in g.nodes:
                    continue
                if g.implies(lt(a, b)):
                    tally[0] += 1
                elif g.implies(lt(b, a)):
                    tally[1] += 1
                elif g.implies(eq(a, b)):
                    tally[0] += 1
                    tally[1] += 1
                    tally[2] += 1
            if any(tally):
                counts[(a, b)] = tuple(tally)
    return PairWeights(ids=tuple(id_list), counts=counts)


@dataclass(frozen=True)
class SolveStats:
    nodes: int
    runtime_ms: float


@dataclass(frozen=True)
class ConsensusRelations:
    """A total weak ordering: level[id] ranks LOK from lowest (0) upward."""

    ids: tuple[str, ...]
    level: dict[str, int]
    objective: int
    stats: Optional[SolveStats] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "ids", tuple(sorted(self.ids)))
        if set(self.level) != set(self.ids):
            raise ValueError("level map must cover exactly the ids")
        used = sorted(set(self.level.values()))
        if used and used != list(range(len(used))):
            raise ValueError("levels must be consecutive from 0")

    def x_le(self, a: str, b: str) -> bool:
        return self.level[a] <= self.level[b]

    def x_eq(self, a: str, b: str) -> bool:
        return self.level[a] == self.level[b]


def _pair_costs(w: PairWeights):
    """cost[(i, j)] for i < j as (equal, i_below_j, j_below_i)."""
    ids = w.ids
    costs = {}
    for i in range(len(ids)):
        for j in range(i + 1, len(ids)):
            a, b = ids[i], ids[j]
            le_ab, le_ba = w.le(a, b), w.le(b, a)
            eq_ab = w.eq_weight(a, b)
            costs[(i, j)] = (le_ab + le_ba - 2 * eq_ab, le_ba, le_ab)
    return costs


class _Search:
    """Insertion-tree search over weak orderings.

    Elements go in sorted-id order; element j either joins an existing block
    or opens a new one in any gap, so every ordered set partition is built
    exactly once. A child's "slice" records, per already-placed element, the
    relation it gives that pair: 0 equal, 1 earlier-id strictly below,
    2 earlier-id strictly above. Concatenated slices form the canonical key
    that tie-breaking minimizes.
    """

    def __init__(self, w: PairWeights, cancel: Optional[CancellationToken]):
        self.ids = w.ids
        self.n = len(w.ids)
        self.costs = _pair_costs(w)
        self.cancel = cancel
        self.nodes = 0
        n = self.n
        pair_min = {k: min(v) for k, v in self.costs.items()}
        # cross[s][i]: cheapest possible total over pairs (p, x) with
        # s <= p < i <= x, i.e. placed-to-future pairs of the sub-instance
        # that starts at element s once elements up to i are placed
        self.cross = [[0] * (n + 1) for _ in range(n + 1)]
        for s in range(n):
            for i in range(s, n + 1):
                total = 0
                for x in range(i, n):
                    for p in range(s, i):
                        total += pair_min[(p, x)]
                self.cross[s][i] = total
        # suffix_opt[j]: exact optimum of the sub-instance on elements
        # j..n-1, solved bottom-up so each solve borrows the deeper ones
        # as completion bounds; future-future pairs are then bounded
        # exactly, which is what keeps dense conflicts tractable
        self.suffix_opt = [0] * (n + 1)
        for s in range(n - 2, -1, -1):
            self.suffix_opt[s] = self._optimum_from(s)

    def _tick(self):
        self.nodes += 1
        if self.cancel is not None and self.cancel.cancelled:
            raise SolveCancelled("consensus solve cancelled")

    def _children(self, blocks: list[list[int]], j: int):
        """All placements of element j: (slice, cost_delta, new_blocks)."""
        placed = [(e, bi) for bi, block in enumerate(blocks) for e in block]
        placed.sort()
        out = []
        m = len(blocks)
        for p in range(m):
            sl, delta = [], 0
            for e, bi in placed:
                ceq, clo, chi = self.costs[(e, j)]
                if bi == p:
                    sl.append(0)
                    delta += ceq
                elif bi < p:
                    sl.append(1)
                    delta += clo
                else:
                    sl.append(2)
                    delta += chi
            nb = [list(b) for b in blocks]
            nb[p].append(j)
            out.append((tuple(sl), delta, nb))
        for gap in range(m + 1):
            sl, delta = [], 0
            for e, bi in placed:
                ceq, clo, chi = self.costs[(e, j)]
                if bi < gap:
                    sl.append(1)
                    delta += clo
                else:
                    sl.append(2)
                    delta += chi
            nb = [list(b) for b in blocks]
            nb.insert(gap, [j])
            out.append((tuple(sl), delta, nb))
        return out

    def _optimum_from(self, start: int) -> int:
        """Best objective over elements start..n-1, cheapest-first B&B."""
        best = [None]
        cross_row = self.cross[start]
        suffix_opt = self.suffix_opt

        def dfs(blocks, j, acc):
            self._tick()
            if j == self.n:
                if best[0] is None or acc < best[0]:
                    best[0] = acc
                return
            children = self._children(blocks, j)
            children.sort(key=lambda c: (c[1], c[0]))
            for sl, delta, nb in children:
                bound = acc + delta + cross_row[j + 1] + suffix_opt[j + 1]
                if best[0] is not None and bound >= best[0]:
                    continue
                dfs(nb, j + 1, acc + delta)

        dfs([[start]], start + 1, 0)
        return best[0] if best[0] is not None else 0

    def find_optimum(self) -> int:
        """Best objective; the bottom-up suffix pass already computed it."""
        return self.suffix_opt[0]

    def first_optimal_leaf(self, opt: int) -> list[list[int]]:
        """Canonical-order descent; first surviving leaf is the
        lexicographic minimum among optimal solutions."""
        cross_row = self.cross[0]
        suffix_opt = self.suffix_opt

        def dfs(blocks, j, acc):
            self._tick()
            if j == self.n:
                return blocks
            children = self._children(blocks, j)
            children.sort(key=lambda c: c[0])
            for sl, delta, nb in children:
                if acc + delta + cross_row[j + 1] + suffix_opt[j + 1] > opt:
                    continue
                hit = dfs(nb, j + 1, acc + delta)
                if hit is not None:
                    return hit
            return None

        result = dfs([[0]], 1, 0)
        assert result is not None, "no leaf at the proven optimum"
        return result


def solve_consensus(
    w: PairWeights,
    *,
    exact_bound: int = DEFAULT_EXACT_BOUND,
    cancel: Optional[CancellationToken] = None,
) -> ConsensusRelations:
    """Exact minimum-conflict weak ordering with deterministic tie-breaking.

    Ties prefer equality, then the lexicographically smaller id below, pair
    by pair in insertion order. Structured inputs solve in milliseconds;
    maximally conflicting weights at the default bound of 12 ids take a few
    seconds, which is why the bound is configurable and long solves can be
    interrupted through ``cancel``.
    """
    started = time.perf_counter()
    n = len(w.ids)
    if n > exact_bound:
        raise SizeLimitExceeded(
            "%d ids exceed the exact solve bound of %d" % (n, exact_bound)
        )
    if n == 0:
        return ConsensusRelations(
            ids=(), level={}, objective=0,
            stats=SolveStats(nodes=0, runtime_ms=0.0),
        )
    if n == 1:
        ms = (time.perf_counter() - started) * 1000
        return ConsensusRelations(
            ids=w.ids, level={w.ids[0]: 0}, objective=0,
            stats=SolveStats(nodes=1, runtime_ms=ms),
        )

    search = _Search(w, cancel)
    opt = search.find_optimum()
    blocks = search.first_optimal_leaf(opt)
    level = {w.ids[e]: bi for bi, block in enumerate(blocks) for e in block}
    ms = (time.perf_counter() - started) * 1000
    return ConsensusRelations(
        ids=w.ids,
        level=level,
        objective=opt,
        stats=SolveStats(nodes=search.nodes, runtime_ms=ms),
    )


def iter_weak_orderings(count: int) -> Iterator[list[list[int]]]:
    """All ordered set partitions of range(count), in canonical search order."""
    if count == 0:
        yield []
        return

    def rec(blocks, j):
        if j == count:
            yield [list(b) for b in blocks]
            return
        m = len(blocks)
        options = []
        for p in range(m):
            nb = [list(b) for b in blocks]
            nb[p].append(j)
            options.append((_slice_of(blocks, j, ("join", p)), nb))
        for gap in range(m + 1):
            nb = [list(b) for b in blocks]
            nb.insert(gap, [j])
            options.append((_slice_of(blocks, j, ("gap", gap)), nb))
        options.sort(key=lambda o: o[0])
        for _, nb in options:
            yield from rec(nb, j + 1)

    yield from rec([[0]], 1)


def _slice_of(blocks: list[list[int]], j: int, placement) -> tuple[int, ...]:
    placed = sorted((e, bi) for bi, block in enumerate(blocks) for e in block)
    kind, pos = placement
    out = []
    for e, bi in placed:
        if kind == "join" and bi == pos:
            out.append(0)
        elif bi < pos:
            out.append(1)
        else:
            out.append(2)
    return tuple(out)


def brute_force_consensus(w: PairWeights) -> ConsensusRelations:
    """Enumerate every weak ordering (|P| <= 5) and keep the first minimum.

    Test oracle for solve_consensus; enumeration order matches the solver's
    canonical order, so tie-breaking agrees too.
    """
    n = len(w.ids)
    if n > 5:
        raise ValueError("brute force capped at 5 ids (%d given)" % n)
    if n == 0:
        return ConsensusRelations(ids=(), level={}, objective=0)
    costs = _pair_costs(w)
    best_blocks, best_cost = None, None
    for blocks in iter_weak_orderings(n):
        level = {e: bi for bi, block in enumerate(blocks) for e in block}
        cost = 0
        for (i, j), (ceq, clo, chi) in costs.items():
            if level[i] == level[j]:
                cost += ceq
            elif level[i] < level[j]:
                cost += clo
            else:
                cost += chi
        if best_cost is None or cost < best_cost:
            best_cost, best_blocks = cost, blocks
    level = {w.ids[e]: bi for bi, block in enumerate(best_blocks) for e in block}
    return ConsensusRelations(ids=w.ids, level=level, objective=best_cost)


def consensus_to_gt_eq(
    c: ConsensusRelations,
) -> tuple[set[tuple[str, str]], set[frozenset[str]]]:
    """GT (greater, lesser) and EQ pairs implied by the weak ordering."""
    gt: set[tuple[str, str]] = set()
    eqs: set[frozenset[str]] = set()
    for i, a in enumerate(c.ids):
        for b in c.ids[i + 1:]:
            if c.level[a] > c.level[b]:
                gt.add((a, b))
            elif c.level[a] < c.level[b]:
                gt.add((b, a))
            else:
                eqs.add(frozenset((a, b)))
    return gt, eqs
