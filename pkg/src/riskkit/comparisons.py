"""Pairwise level-of-knowledge comparisons with rule-based consistency.

An expert compares characterizations two at a time: one knows strictly less
than the other (``lt``) or both are known equally well (``eq``). Three
implication rules close the asserted set:

    a < b  and  b < c   implies   a < c
    a = b  and  b = c   implies   a = c
    a < b  and  b = c   implies   a < c   (and the mirrored eq/lt form)

The closure must never contain a strict cycle, nor a pair related both
strictly and by equality. Insertions that would break this are rejected with
a minimal witness chain of previously asserted comparisons, so the caller
can show the expert exactly which of their earlier answers conflict.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

__all__ = [
    "Relation",
    "lt",
    "eq",
    "ContradictionError",
    "ComparisonGraph",
    "infer_closure",
    "extract_gt_eq",
]


@dataclass(frozen=True)
class Relation:
    """``lt(a, b)`` reads "a is known strictly less than b"; ``eq`` is unordered.

    Equality relations are canonicalized so that ``a <= b`` lexicographically,
    which makes the symmetric pair a single value.
    """

    kind: str
    a: str
    b: str

    def __post_init__(self):
        if self.kind not in ("lt", "eq"):
            raise ValueError(f"relation kind must be 'lt' or 'eq', got {self.kind!r}")
        if self.a == self.b:
            raise ValueError(f"self-comparison on {self.a!r} is not allowed")
        if self.kind == "eq" and self.a > self.b:
            low, high = self.b, self.a
            object.__setattr__(self, "a", low)
            object.__setattr__(self, "b", high)

    def endpoints(self) -> tuple[str, str]:
        return (self.a, self.b)


def _canonical_eq(a: str, b: str) -> "Relation":
    return Relation("eq", min(a, b), max(a, b))


def lt(a: str, b: str) -> Relation:
    return Relation("lt", a, b)


def eq(a: str, b: str) -> Relation:
    return Relation("eq", a, b)


class ContradictionError(Exception):
    """A comparison conflicts with what is already implied.

    ``witness`` is a minimal chain of *asserted* relations whose closure
    conflicts with ``rejected``.
    """

    def __init__(self, rejected: Optional[Relation], witness: tuple[Relation, ...], detail: str):
        self.rejected = rejected
        self.witness = tuple(witness)
        super().__init__(detail)


class _UnionFind:
    def __init__(self, items: Iterable[str]):
        self.parent = {x: x for x in items}

    def find(self, x: str) -> str:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # deterministic representative: lexicographically smallest
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


def _witness_equal(asserted: Iterable[Relation], src: str, dst: str) -> tuple[Relation, ...]:
    """Shortest chain of asserted eq relations proving src = dst."""
    adj: dict[str, list[tuple[str, Relation]]] = {}
    for r in asserted:
        if r.kind == "eq":
            adj.setdefault(r.a, []).append((r.b, r))
            adj.setdefault(r.b, []).append((r.a, r))
    prev: dict[str, tuple[str, Relation]] = {}
    seen = {src}
    queue = deque([src])
    while queue:
        node = queue.popleft()
        if node == dst:
            chain = []
            while node != src:
                node, rel = prev[node]
                chain.append(rel)
            return tuple(reversed(chain))
        for nxt, rel in adj.get(node, []):
            if nxt not in seen:
                seen.add(nxt)
                prev[nxt] = (node, rel)
                queue.append(nxt)
    raise AssertionError(f"no equality path {src!r} -> {dst!r}; closure out of sync")


def _witness_strict(asserted: Iterable[Relation], src: str, dst: str) -> tuple[Relation, ...]:
    """Shortest chain of asserted relations proving src < dst (>= 1 strict link)."""
    adj: dict[str, list[tuple[str, bool, Relation]]] = {}
    for r in asserted:
        if r.kind == "eq":
            adj.setdefault(r.a, []).append((r.b, False, r))
            adj.setdefault(r.b, []).append((r.a, False, r))
        else:
            adj.setdefault(r.a, []).append((r.b, True, r))
    start = (src, False)
    prev: dict[tuple[str, bool], tuple[tuple[str, bool], Relation]] = {}
    seen = {start}
    queue = deque([start])
    while queue:
        state = queue.popleft()
        if state == (dst, True):
            chain = []
            while state != start:
                state, rel = prev[state]
                chain.append(rel)
            return tuple(reversed(chain))
        node, strict = state
        for nxt, is_strict, rel in adj.get(node, []):
            nxt_state = (nxt, strict or is_strict)
            if nxt_state not in seen:
                seen.add(nxt_state)
                prev[nxt_state] = (state, rel)
                queue.append(nxt_state)
    raise AssertionError(f"no strict path {src!r} -> {dst!r}; closure out of sync")


class _ClosureIndex:
    """EQ-contracted component structure plus strict reachability between components."""

    def __init__(self, nodes: frozenset[str], asserted: tuple[Relation, ...]):
        uf = _UnionFind(nodes)
        for r in asserted:
            if r.kind == "eq":
                uf.union(r.a, r.b)
        self.comp_of = {n: uf.find(n) for n in nodes}
        self.members: dict[str, list[str]] = {}
        for n in sorted(nodes):
            self.members.setdefault(self.comp_of[n], []).append(n)

        self.inner_strict: Optional[Relation] = None  # lt inside an eq class
        self.cycle_comp: Optional[str] = None
        self.reach: dict[str, set[str]] = {}

        # strict edges between components
        edges: dict[str, set[str]] = {c: set() for c in self.members}
        for r in asserted:
            if r.kind == "lt":
                ca, cb = self.comp_of[r.a], self.comp_of[r.b]
                if ca == cb:
                    self.inner_strict = r
                    return
                edges[ca].add(cb)
        self.edges = edges

        # reach[c] = components reachable from c through >= 1 strict edge
        for c in self.members:
            seen: set[str] = set()
            queue = deque(edges[c])
            while queue:
                d = queue.popleft()
                if d in seen:
                    continue
                seen.add(d)
                queue.extend(edges[d] - seen)
            self.reach[c] = seen
            if c in seen:
                self.cycle_comp = c
                return

    def consistent(self) -> bool:
        return self.inner_strict is None and self.cycle_comp is None

    def implies(self, r: Relation) -> bool:
        ca, cb = self.comp_of.get(r.a), self.comp_of.get(r.b)
        if ca is None or cb is None:
            return False
        if r.kind == "eq":
            return ca == cb
        return ca != cb and cb in self.reach[ca]

    def relations(self) -> frozenset[Relation]:
        out: set[Relation] = set()
        for members in self.members.values():
            for i, a in enumerate(members):
                for b in members[i + 1:]:
                    out.add(_canonical_eq(a, b))
        for c, below in self.reach.items():
            for d in below:
                for a in self.members[c]:
                    for b in self.members[d]:
                        out.add(Relation("lt", a, b))
        return frozenset(out)


def _build_index(nodes: frozenset[str], asserted: tuple[Relation, ...]) -> _ClosureIndex:
    """Build the closure index, raising ContradictionError on inconsistency."""
    index = _ClosureIndex(nodes, asserted)
    if index.inner_strict is not None:
        bad = index.inner_strict
        witness = _witness_equal(asserted, bad.a, bad.b)
        raise ContradictionError(
            None,
            witness + (bad,),
            f"{bad.a!r} < {bad.b!r} asserted but the two are equal by inference",
        )
    if index.cycle_comp is not None:
        # some strict cycle exists; surface the shortest one through any member
        start = index.members[index.cycle_comp][0]
        witness = _witness_strict(asserted, start, start)
        raise ContradictionError(
            None, witness, f"strict comparison cycle through {start!r}"
        )
    return index


@dataclass(frozen=True)
class ComparisonGraph:
    """One expert's consistent comparison set over a fixed node universe.

    Immutable: ``add``/``remove`` return a new graph. The closure is
    recomputed eagerly so an inconsistent graph can never be constructed.
    """

    nodes: frozenset[str]
    asserted: tuple[Relation, ...] = ()
    _index: _ClosureIndex = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for r in self.asserted:
            self._check_endpoints(r)
        object.__setattr__(self, "_index", _build_index(self.nodes, self.asserted))

    def _check_endpoints(self, r: Relation) -> None:
        for x in r.endpoints():
            if x not in self.nodes:
                raise ValueError(f"unknown characterization {x!r}")

    @classmethod
    def empty(cls, nodes: Iterable[str]) -> "ComparisonGraph":
        return cls(nodes=frozenset(nodes))

    def with_nodes(self, extra: Iterable[str]) -> "ComparisonGraph":
        return ComparisonGraph(self.nodes | frozenset(extra), self.asserted)

    def closure(self) -> frozenset[Relation]:
        return self._index.relations()

    def implies(self, r: Relation) -> bool:
        return self._index.implies(r)

    def add(self, r: Relation) -> "ComparisonGraph":
        """Insert a comparison; no-op (same graph) if already implied.

        Raises ContradictionError with a minimal witness chain if the
        comparison conflicts with the existing closure.
        """
        self._check_endpoints(r)
        if self._index.implies(r):
            return self
        conflict = self._conflicting_witness(r)
        if conflict is not None:
            raise ContradictionError(r, conflict, f"comparison {r} contradicts earlier comparisons")
        return ComparisonGraph(self.nodes, self.asserted + (r,))

    def _conflicting_witness(self, r: Relation) -> Optional[tuple[Relation, ...]]:
        if r.kind == "lt":
            if self._index.implies(Relation("lt", r.b, r.a)):
                return _witness_strict(self.asserted, r.b, r.a)
            if self._index.implies(_canonical_eq(r.a, r.b)):
                return _witness_equal(self.asserted, r.a, r.b)
        else:
            for x, y in ((r.a, r.b), (r.b, r.a)):
                if self._index.implies(Relation("lt", x, y)):
                    return _witness_strict(self.asserted, x, y)
        return None

    def remove(self, r: Relation) -> "ComparisonGraph":
        """Retract an asserted comparison and recompute the closure."""
        key = _canonical_eq(r.a, r.b) if r.kind == "eq" else r
        remaining = tuple(x for x in self.asserted if x != key)
        if len(remaining) == len(self.asserted):
            raise ValueError(f"{r} was never asserted")
        return ComparisonGraph(self.nodes, remaining)

    def extract_gt_eq(self) -> tuple[set[tuple[str, str]], set[frozenset[str]]]:
        """Closure as calibration input: GT pairs (greater, lesser) and EQ pairs."""
        gt: set[tuple[str, str]] = set()
        eq_pairs: set[frozenset[str]] = set()
        for r in self.closure():
            if r.kind == "lt":
                gt.add((r.b, r.a))
            else:
                eq_pairs.add(frozenset((r.a, r.b)))
        return gt, eq_pairs

    def adjacency(self) -> list[dict]:
        """Closure as an edge list: ``gt`` edge x->y means x is known strictly more."""
        edges = []
        for r in sorted(self.closure(), key=lambda r: (r.kind, r.a, r.b)):
            if r.kind == "lt":
                edges.append({"from": r.b, "to": r.a, "kind": "gt"})
            else:
                edges.append({"from": r.a, "to": r.b, "kind": "eq"})
        return edges


def infer_closure(
    asserted: Iterable[Relation], nodes: Optional[Iterable[str]] = None
) -> frozenset[Relation]:
    """Least fixed point of the three implication rules over ``asserted``.

    Deterministic and idempotent. Raises ContradictionError if the fixed
    point would relate some pair both strictly and the other way (or by
    equality).
    """
    asserted = tuple(asserted)
    if nodes is None:
        node_set = frozenset(x for r in asserted for x in r.endpoints())
    else:
        node_set = frozenset(nodes)
    index = _build_index(node_set, asserted)
    return index.relations()


def extract_gt_eq(g) -> tuple[set[tuple[str, str]], set[frozenset[str]]]:
    """GT/EQ pairs from a graph or from an already-computed closure.

    GT pairs are ordered (greater, lesser); each equality shows up once as
    an unordered pair.
    """
    if isinstance(g, ComparisonGraph):
        return g.extract_gt_eq()
    gt: set[tuple[str, str]] = set()
    eqs: set[frozenset[str]] = set()
    for r in g:
        if r.kind == "lt":
            gt.add((r.b, r.a))
        else:
            eqs.add(frozenset((r.a, r.b)))
    return gt, eqs
