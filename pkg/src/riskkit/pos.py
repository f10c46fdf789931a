"""Knowledge-constrained probability-of-success assessment.

The allowed POS values for a candidate depend on how well it is known: at
low knowledge the assessment is pinned near fifty-fifty, at high knowledge
it must commit toward one of the extremes. The region between two
piecewise-linear curves of |pos - 0.5| over the knowledge score expresses
that constraint; everything here evaluates, validates and projects against
it. POS values are always human-entered; the machine only constrains them.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

__all__ = [
    "LikelihoodRegion",
    "DEFAULT_REGION",
    "PosEntry",
    "PosValidation",
    "allowed_intervals",
    "validate_pos",
    "project_to_allowed",
    "consensus_pos",
    "rank_similar",
    "region_to_config",
    "region_from_config",
    "region_polygons",
]

Breakpoints = tuple[tuple[float, float], ...]

_HALF = Fraction(1, 2)


def _check_breakpoints(name: str, points) -> None:
    if len(points) < 2:
        raise ValueError("%s needs at least two breakpoints" % name)
    loks = [l for l, _ in points]
    if loks[0] != 0 or loks[-1] != 1:
        raise ValueError("%s breakpoints must start at lok 0 and end at lok 1" % name)
    if any(b <= a for a, b in zip(loks, loks[1:])):
        raise ValueError("%s breakpoint loks must be strictly increasing" % name)
    values = [v for _, v in points]
    if any(not (0 <= v <= _HALF) for v in values):
        raise ValueError("%s values must lie in [0, 0.5]" % name)
    if any(b < a for a, b in zip(values, values[1:])):
        raise ValueError("%s must be non-decreasing" % name)


def _interp(points, lok: Fraction) -> Fraction:
    """Exact piecewise-linear evaluation over rational breakpoints."""
    for (l0, v0), (l1, v1) in zip(points, points[1:]):
        if lok <= l1:
            if lok <= l0:
                return v0
            w = (lok - l0) / (l1 - l0)
            return (1 - w) * v0 + w * v1
    return points[-1][1]


def _exact_lok(lok: float) -> Fraction:
    if not (0.0 <= lok <= 1.0):
        raise ValueError("lok must be in [0, 1], got %r" % lok)
    return Fraction(lok)


@dataclass(frozen=True)
class LikelihoodRegion:
    """Band of allowed |pos - 0.5| distances as a function of knowledge.

    inner is the minimum required distance from 0.5, outer the maximum
    permitted one; both are piecewise linear over lok in [0, 1]. Breakpoint
    numbers keep their decimal meaning (0.45 is exactly 9/20), so interval
    endpoints like 0.5 - 0.45 come out as clean decimals.
    """

    inner: Breakpoints
    outer: Breakpoints

    def __post_init__(self):
        inner = tuple((float(l), float(v)) for l, v in self.inner)
        outer = tuple((float(l), float(v)) for l, v in self.outer)
        object.__setattr__(self, "inner", inner)
        object.__setattr__(self, "outer", outer)
        exact = {}
        for name, points in (("inner", inner), ("outer", outer)):
            exact[name] = tuple(
                (Fraction(str(l)), Fraction(str(v))) for l, v in points
            )
            _check_breakpoints(name, exact[name])
        object.__setattr__(self, "_exact", exact)
        # piecewise-linear comparison: checking the union of knots suffices
        for lok in sorted({l for l, _ in exact["inner"]} | {l for l, _ in exact["outer"]}):
            if _interp(exact["inner"], lok) > _interp(exact["outer"], lok):
                raise ValueError("inner exceeds outer at lok %s" % float(lok))

    def inner_at(self, lok: float) -> float:
        return float(_interp(self._exact["inner"], _exact_lok(lok)))

    def outer_at(self, lok: float) -> float:
        return float(_interp(self._exact["outer"], _exact_lok(lok)))


DEFAULT_REGION = LikelihoodRegion(
    inner=((0.0, 0.0), (0.5, 0.0), (1.0, 0.45)),
    outer=((0.0, 0.05), (1.0, 0.5)),
)


def allowed_intervals(r: LikelihoodRegion, lok: float) -> tuple[tuple[float, float], ...]:
    """Closed POS intervals allowed at this knowledge level, ascending.

    One interval around 0.5 while the inner curve sits at zero, two
    mirrored ones once a minimum distance from 0.5 is required; always
    clipped to [0, 1].
    """
    return tuple(
        (float(lo), float(hi)) for lo, hi in _exact_intervals(r, lok)
    )


def _exact_intervals(r: LikelihoodRegion, lok: float) -> list[tuple[Fraction, Fraction]]:
    at = _exact_lok(lok)
    inner = _interp(r._exact["inner"], at)
    outer = _interp(r._exact["outer"], at)
    if inner == 0:
        return [(max(0, _HALF - outer), min(1, _HALF + outer))]
    return [
        (max(0, _HALF - outer), min(1, _HALF - inner)),
        (max(0, _HALF + inner), min(1, _HALF + outer)),
    ]


def project_to_allowed(r: LikelihoodRegion, lok: float, pos: float) -> float:
    """Nearest allowed POS; distance ties resolve toward 0.5, then downward.

    Distances are compared in exact arithmetic so that the geometric tie at
    full knowledge (0.5 against mirrored intervals) lands on the lower
    interval instead of whichever way float subtraction happens to round.
    """
    target = Fraction(pos)
    best = None
    for lo, hi in _exact_intervals(r, lok):
        cand = min(max(target, lo), hi)
        key = (abs(cand - target), abs(cand - _HALF), cand)
        if best is None or key < best[0]:
            best = (key, cand)
    return float(best[1])


@dataclass(frozen=True)
class PosValidation:
    accepted: bool
    nearest: float


def validate_pos(r: LikelihoodRegion, lok: float, pos: float) -> PosValidation:
    """Accept iff pos falls in the allowed intervals; always carry the nearest."""
    if not (0.0 <= pos <= 1.0):
        raise ValueError("pos must be in [0, 1], got %r" % pos)
    accepted = any(lo <= pos <= hi for lo, hi in allowed_intervals(r, lok))
    nearest = pos if accepted else project_to_allowed(r, lok, pos)
    return PosValidation(accepted=accepted, nearest=nearest)


@dataclass(frozen=True)
class PosEntry:
    """One expert's POS for one characterization, with the lok it was made at.

    The workspace layer checks the region constraint before recording an
    entry; the value object itself only validates ranges.
    """

    expert_id: str
    characterization_id: str
    pos: float
    lok_used: float
    scale_kind: str  # "expert" | "global"

    def __post_init__(self):
        if self.scale_kind not in ("expert", "global"):
            raise ValueError("scale_kind must be 'expert' or 'global', got %r" % self.scale_kind)
        for name, value in (("pos", self.pos), ("lok_used", self.lok_used)):
            if not (0.0 <= value <= 1.0):
                raise ValueError("%s must be in [0, 1], got %r" % (name, value))


def consensus_pos(entries: Sequence[PosEntry], r: LikelihoodRegion, global_lok: float) -> float:
    """Suggested peer-review POS: the median entry projected into the region.

    Advisory only; whatever value the peer review finally records must
    itself validate at the global lok.
    """
    if not entries:
        raise ValueError("consensus needs at least one POS entry")
    median = statistics.median(e.pos for e in entries)
    return project_to_allowed(r, global_lok, float(median))


def rank_similar(
    target_id: str,
    target_bits: Sequence[int],
    candidates: Iterable[tuple[str, Sequence[int]]],
    k: int,
) -> list[tuple[str, float]]:
    """Top-k candidates by bit similarity to the target, self excluded.

    Ties break by id so the ranking is reproducible. Candidates must share
    the target's layout; the caller guarantees that by construction.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    scored = []
    width = len(target_bits)
    for cid, bits in candidates:
        if cid == target_id:
            continue
        if len(bits) != width:
            raise ValueError("candidate %r has %d bits, target has %d" % (cid, len(bits), width))
        diffs = sum(1 for x, y in zip(target_bits, bits) if x != y)
        score = 1.0 if width == 0 else 1.0 - diffs / width
        scored.append((-score, cid))
    scored.sort()
    return [(cid, -neg) for neg, cid in scored[:k]]


def region_to_config(r: LikelihoodRegion) -> dict:
    return {
        "inner": [[l, v] for l, v in r.inner],
        "outer": [[l, v] for l, v in r.outer],
    }


def region_from_config(config: dict) -> LikelihoodRegion:
    try:
        inner = tuple((float(l), float(v)) for l, v in config["inner"])
        outer = tuple((float(l), float(v)) for l, v in config["outer"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError("region config needs inner/outer breakpoint lists: %s" % exc) from exc
    return LikelihoodRegion(inner=inner, outer=outer)


def _boundary_knots(r: LikelihoodRegion) -> list[Fraction]:
    """Union of curve knots plus the loks where a clipped edge meets 0 or 1."""
    knots = {l for l, _ in r._exact["inner"]} | {l for l, _ in r._exact["outer"]}
    # 0.5 - outer(l) crosses 0 where outer(l) = 0.5; piecewise-linear pieces
    for (l0, v0), (l1, v1) in zip(r._exact["outer"], r._exact["outer"][1:]):
        if (v0 - _HALF) * (v1 - _HALF) < 0:
            knots.add(l0 + (_HALF - v0) * (l1 - l0) / (v1 - v0))
    return sorted(knots)


def region_polygons(r: LikelihoodRegion) -> list[list[tuple[float, float]]]:
    """The allowed set as one or two (pos, lok) polygons for plotting.

    The left lobe runs up the inner edge and back down the outer edge; the
    right lobe mirrors it. While inner is zero the lobes share the pos=0.5
    edge, so drawing both still renders the single merged region.
    """
    knots = _boundary_knots(r)
    inner = [_interp(r._exact["inner"], l) for l in knots]
    outer = [_interp(r._exact["outer"], l) for l in knots]
    left = [(float(_HALF - v), float(l)) for v, l in zip(inner, knots)]
    left += [
        (float(max(0, _HALF - v)), float(l))
        for v, l in zip(reversed(outer), reversed(knots))
    ]
    right = [(float(_HALF + v), float(l)) for v, l in zip(inner, knots)]
    right += [
        (float(min(1, _HALF + v)), float(l))
        for v, l in zip(reversed(outer), reversed(knots))
    ]
    return [left, right]
