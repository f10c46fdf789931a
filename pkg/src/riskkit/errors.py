"""One mapping from domain exceptions to the wire error envelope.

Both the HTTP layer and the CLI speak the same envelope:
``{"error": {"code": ..., "message": ..., "details": {...}}}``. Keeping
the classification here means a new domain error only has to be wired up
once.
"""

from __future__ import annotations

from typing import Optional

from .calibration import InfeasibleComparisonChain, MalformedProblem
from .comparisons import ContradictionError, Relation
from .consensus import SizeLimitExceeded, SolveCancelled
from .service import NothingToSolve, UnknownEntity
from .store import StoreCorrupt, UnknownWorkspace, ValidationFailed, VersionConflict

__all__ = ["describe", "envelope", "relation_json", "DOMAIN_ERRORS"]

# order matters where classes are related: subclasses of ValueError must be
# listed (and tested) before the ValueError catch-all
DOMAIN_ERRORS = (
    UnknownWorkspace,
    UnknownEntity,
    NothingToSolve,
    VersionConflict,
    ContradictionError,
    InfeasibleComparisonChain,
    SizeLimitExceeded,
    SolveCancelled,
    StoreCorrupt,
    MalformedProblem,
    ValidationFailed,
    ValueError,
    KeyError,
)


def relation_json(r: Relation) -> dict:
    return {"kind": r.kind, "a": r.a, "b": r.b}


def describe(exc: BaseException) -> Optional[tuple[int, str, str, dict]]:
    """(http_status, code, message, details) for a known domain error."""
    if isinstance(exc, UnknownWorkspace):
        return 404, "not_found", "unknown workspace %s" % exc.args[0], {}
    if isinstance(exc, UnknownEntity):
        return 404, "not_found", str(exc.args[0]) if exc.args else "not found", {}
    if isinstance(exc, NothingToSolve):
        return 404, "nothing_to_solve", str(exc), {}
    if isinstance(exc, VersionConflict):
        return (
            409,
            "version_conflict",
            str(exc),
            {"expected": exc.expected, "actual": exc.actual},
        )
    if isinstance(exc, ContradictionError):
        return (
            409,
            "contradiction",
            str(exc),
            {
                "rejected": relation_json(exc.rejected),
                "witness": [relation_json(r) for r in exc.witness],
            },
        )
    if isinstance(exc, InfeasibleComparisonChain):
        return 422, "infeasible", str(exc), {"chain": exc.chain, "threshold": exc.t}
    if isinstance(exc, SizeLimitExceeded):
        return 422, "size_limit", str(exc), {}
    if isinstance(exc, SolveCancelled):
        return 422, "cancelled", str(exc), {}
    if isinstance(exc, StoreCorrupt):
        return 500, "store_corrupt", str(exc), {"path": exc.path, "offset": exc.offset}
    if isinstance(exc, (MalformedProblem, ValidationFailed, ValueError)):
        return 422, "validation", str(exc), {}
    if isinstance(exc, KeyError):
        return 404, "not_found", "missing %s" % ", ".join(repr(a) for a in exc.args), {}
    return None


def envelope(code: str, message: str, details: Optional[dict] = None) -> dict:
    return {"error": {"code": code, "message": message, "details": details or {}}}
